#include <math.h>
#include <stdio.h>
#include <string.h>

#include "divgeom.h"

#define CHECK(cond)                                                    \
    do {                                                               \
        if (!(cond)) {                                                 \
            const char *err = dg_last_error();                         \
            fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,     \
                    err ? err : "no error message");                   \
            return 1;                                                  \
        }                                                              \
    } while (0)

int main(void) {
    DgSpec *kl = NULL;
    CHECK(dg_spec_new("kl", NULL, NAN, &kl) == DG_STATUS_OK);

    const double p[2] = {0.5, 0.5};
    const double q[2] = {0.25, 0.75};
    double value = 0.0;
    CHECK(dg_eval(kl, p, q, 2, NULL, &value) == DG_STATUS_OK);
    CHECK(fabs(value - 0.5 * log(4.0 / 3.0)) < 1e-15);

    double mass[2];
    CHECK(dg_line_point(kl, p, q, 2, 0.5, NULL, mass, NULL, NULL) == DG_STATUS_OK);
    CHECK(mass[0] == 0.375 && mass[1] == 0.625);

    const double bad[2] = {0.5, 0.6};
    CHECK(dg_eval(kl, bad, q, 2, NULL, &value) == DG_STATUS_INVALID_DISTRIBUTION);
    CHECK(dg_last_error() != NULL);

    DgSpec *euclidean = NULL;
    CHECK(dg_spec_new("euclidean", NULL, NAN, &euclidean) == DG_STATUS_OK);
    const double far[2] = {0.1, 0.9};
    DgReport *report = NULL;
    CHECK(dg_project_ball(euclidean, p, far, 2, 0.04, NULL, &report) == DG_STATUS_OK);
    CHECK(dg_report_support_size(report) == 2);
    CHECK(dg_report_solution(report, mass, 2) == DG_STATUS_OK);
    CHECK(fabs(mass[0] - 0.3) < 1e-12 && fabs(mass[1] - 0.7) < 1e-12);
    double alpha = 0.0;
    CHECK(dg_report_alpha_star(report, &alpha) == DG_STATUS_OK);
    CHECK(fabs(alpha - 0.5) < 1e-12);
    CHECK(dg_report_beta_len(report) == 0);
    CHECK(dg_report_converged(report));
    dg_report_free(report);

    DgConfig cfg = dg_config_default();
    CHECK(cfg.solver_tol == 1e-10);
    CHECK(strcmp(dg_status_name(DG_STATUS_NON_CONVERGENCE), "non_convergence") == 0);

    dg_spec_free(euclidean);
    dg_spec_free(kl);
    printf("ok %s\n", dg_version());
    return 0;
}
