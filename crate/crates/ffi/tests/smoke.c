#include <math.h>
#include <stdio.h>
#include <string.h>

#include "kslab.h"

#define CHECK(call)                                                   \
    do {                                                              \
        KslabStatus s_ = (call);                                      \
        if (s_ != KSLAB_STATUS_OK) {                                  \
            char msg[256];                                            \
            kslab_last_error(msg, sizeof msg);                        \
            fprintf(stderr, "%s failed (%d): %s\n", #call, s_, msg); \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    KslabGrid *grid = NULL;
    CHECK(kslab_grid_periodic(1, 2.0 * M_PI, 64, &grid));
    double v[64];
    for (int i = 0; i < 64; ++i) v[i] = 0.1 * sin(2.0 * M_PI * i / 64.0);
    KslabField *v0 = NULL;
    CHECK(kslab_field_new(grid, v, 64, &v0));

    KslabModel *model = NULL;
    CHECK(kslab_model_new("mkse", 2, 2.0, 1, &model));
    KslabTrajectory *traj = NULL;
    CHECK(kslab_integrate(model, v0, 1e-3, 0.1, 1e6, &traj));
    KslabOutcome outcome;
    double lo, hi;
    CHECK(kslab_trajectory_outcome(traj, &outcome, &lo, &hi));
    if (outcome != KSLAB_OUTCOME_COMPLETED) return 2;
    size_t n = 0;
    CHECK(kslab_trajectory_len(traj, &n));
    if (n != 101) return 3;

    double t_inf = 0.0;
    CHECK(kslab_t_infinity(KSLAB_CASE_STRICT, 1.0, 1.0, 0.0, &t_inf));
    if (fabs(t_inf - M_PI / 2.0) > 1e-12) return 4;

    if (kslab_model_new("nonsense", 2, 2.0, 1, &model) != KSLAB_STATUS_INVALID_ARGUMENT) return 5;
    char msg[128];
    if (kslab_last_error(msg, sizeof msg) <= 1 || strlen(msg) == 0) return 6;

    kslab_trajectory_free(traj);
    kslab_model_free(model);
    kslab_field_free(v0);
    kslab_grid_free(grid);
    printf("kslab %s ok\n", kslab_version());
    return 0;
}
