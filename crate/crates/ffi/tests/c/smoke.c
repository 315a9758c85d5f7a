#include <math.h>
#include <stdio.h>
#include <string.h>

#include "milpgen.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    MilpgenError rc_ = (call);                                             \
    if (rc_ != MILPGEN_ERROR_OK) {                                         \
      fprintf(stderr, "%s failed (%d): %s\n", #call, (int)rc_,             \
              milpgen_last_error_message());                               \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  MilpgenInstance *inst = NULL;
  CHECK(milpgen_gen_comb_auction(10, 15, 4, 42, &inst));

  size_t m, n, nnz;
  CHECK(milpgen_instance_dims(inst, &m, &n, &nnz));
  if (n != 15 || m == 0) return 2;

  MilpgenSolveResult res;
  CHECK(milpgen_solve(inst, &res));
  if (!res.proven || res.status != MILPGEN_STATUS_OPTIMAL || !(res.value > 0.0)) return 3;

  MilpgenStats st;
  CHECK(milpgen_instance_stats(inst, &st));
  if (!(st.density_mean > 0.0 && st.density_mean <= 1.0)) return 4;

  CHECK(milpgen_instance_label(inst));
  char *json = NULL;
  CHECK(milpgen_instance_to_json(inst, &json));
  MilpgenInstance *copy = NULL;
  CHECK(milpgen_instance_from_json(json, &copy));
  milpgen_string_free(json);

  MilpgenSolveResult res2;
  CHECK(milpgen_solve(copy, &res2));
  if (fabs(res2.value - res.value) > 1e-9) return 5;

  MilpgenInstance *bad = NULL;
  if (milpgen_instance_from_json("[]", &bad) != MILPGEN_ERROR_PARSE) return 6;
  if (strlen(milpgen_last_error_message()) == 0) return 7;

  milpgen_instance_free(copy);
  milpgen_instance_free(inst);
  printf("ok %.6f\n", res.value);
  return 0;
}
