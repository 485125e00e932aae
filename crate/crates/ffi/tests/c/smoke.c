#include <stdio.h>
#include <string.h>

#include "nasch.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    NaschParams params;
    CHECK(nasch_params_canonical(300, 13, &params) == NASCH_STATUS_OK);

    NaschRunSummary one, four;
    CHECK(nasch_run(&params, 1, &one) == NASCH_STATUS_OK);
    CHECK(nasch_run(&params, 4, &four) == NASCH_STATUS_OK);
    CHECK(one.checksum == four.checksum);
    CHECK(one.draws_consumed == 300u * 200u);

    NaschSim *sim = NULL;
    CHECK(nasch_sim_new(&params, &sim) == NASCH_STATUS_OK);
    CHECK(nasch_sim_step(sim, 150, 3) == NASCH_STATUS_OK);
    CHECK(nasch_sim_step(sim, 150, 1) == NASCH_STATUS_OK);
    CHECK(nasch_sim_current_step(sim) == 300);
    size_t n = nasch_sim_car_count(sim);
    CHECK(n == 200);
    uint64_t positions[200];
    uint32_t velocities[200];
    CHECK(nasch_sim_positions(sim, positions, 10) == NASCH_STATUS_BUFFER_TOO_SMALL);
    CHECK(strlen(nasch_last_error_message()) > 0);
    CHECK(nasch_sim_positions(sim, positions, n) == NASCH_STATUS_OK);
    CHECK(nasch_sim_velocities(sim, velocities, n) == NASCH_STATUS_OK);
    NaschObservables obs;
    CHECK(nasch_sim_observables(sim, &obs) == NASCH_STATUS_OK);
    CHECK(obs.mean_velocity == one.observables.mean_velocity);
    nasch_sim_free(sim);

    params.car_count = 0;
    CHECK(nasch_run(&params, 1, &one) == NASCH_STATUS_INVALID_PARAMS);
    CHECK(nasch_lcg_jump(1, 10000) == 399268537u);

    printf("nasch %s C smoke test ok\n", nasch_version());
    return 0;
}
