#include <stdio.h>
#include <string.h>
#include "pascal_boundary.h"

static int fail(const char *what) {
  char *msg = pb_last_error_message();
  fprintf(stderr, "%s: %s\n", what, msg ? msg : "(none)");
  pb_string_free(msg);
  return 1;
}

int main(void) {
  PbGraph *g = NULL;
  if (pb_graph_new("qpascal;q=1/2", &g) != PB_STATUS_OK) return fail("graph");
  char *d = NULL;
  if (pb_graph_dimension(g, 1, 1, &d) != PB_STATUS_OK) return fail("dimension");
  printf("d(1,1)=%s\n", d);
  int ok = strcmp(d, "3/2") == 0;
  pb_string_free(d);
  pb_graph_free(g);

  PbPhi *phi = NULL;
  if (pb_phi_new("polya;a=1;b=1", 4, &phi) != PB_STATUS_OK) return fail("phi");
  double v = 0.0;
  if (pb_phi_value_f64(phi, 2, 2, &v) != PB_STATUS_OK) return fail("phi value");
  printf("phi(2,2)=%.17g\n", v);
  ok = ok && v > 0.0333 && v < 0.0334;
  if (pb_phi_value_f64(phi, 5, 0, &v) != PB_STATUS_OUT_OF_RANGE) ok = 0;
  pb_phi_free(phi);

  PbGraph *bad = NULL;
  if (pb_graph_new("nonsense", &bad) != PB_STATUS_PARSE) ok = 0;
  char *msg = pb_last_error_message();
  ok = ok && msg != NULL && strstr(msg, "nonsense") != NULL;
  pb_string_free(msg);

  char *json = NULL;
  if (pb_boundary_report_json("qpascal;q=1/2", 4, &json) != PB_STATUS_OK) return fail("boundary");
  ok = ok && strstr(json, "\"discrete\"") != NULL;
  pb_string_free(json);
  return ok ? 0 : 2;
}
