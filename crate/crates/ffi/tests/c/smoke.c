#include <math.h>
#include <stdio.h>
#include <string.h>

#include "etlasso.h"

#define N 100
#define P 6

static double lcg(unsigned long long *s) {
  *s = *s * 6364136223846793005ULL + 1442695040888963407ULL;
  return (double)(*s >> 11) / 9007199254740992.0 - 0.5;
}

int main(void) {
  double x[N * P], y[N];
  unsigned long long s = 42;
  for (int i = 0; i < N; i++) {
    for (int j = 0; j < P; j++) x[i * P + j] = lcg(&s);
    y[i] = 4.0 * x[i * P + 1] - 1.5;
  }

  EtlDataset *ds = NULL;
  if (etl_dataset_new(x, N, P, y, &ds) != ETL_STATUS_OK) {
    fprintf(stderr, "dataset: %s\n", etl_last_error());
    return 1;
  }
  EtlOptions opts;
  etl_options_default(&opts);
  EtlSelection *sel = NULL;
  if (etl_select(ds, 1, &opts, &sel) != ETL_STATUS_OK) {
    fprintf(stderr, "select: %s\n", etl_last_error());
    return 1;
  }
  size_t idx[P];
  double coef[P];
  size_t k = etl_selection_len(sel);
  etl_selection_indices(sel, idx, P);
  etl_selection_coefficients(sel, coef, P);
  int ok = k == 1 && idx[0] == 1 && fabs(coef[0] - 4.0) < 1e-9 &&
           fabs(etl_selection_intercept(sel) + 1.5) < 1e-9;

  EtlStatus st = etl_select(NULL, 1, &opts, &sel);
  ok = ok && st == ETL_STATUS_NULL_POINTER && strlen(etl_last_error()) > 0;

  etl_selection_free(sel);
  etl_dataset_free(ds);
  printf("etlasso %s: %s\n", etl_version(), ok ? "ok" : "FAILED");
  return ok ? 0 : 1;
}
