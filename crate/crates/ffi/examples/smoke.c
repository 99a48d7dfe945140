#include <stdio.h>

#include "depthpose.h"

int main(void) {
    DpMesh *mesh = NULL;
    if (dp_mesh_load("l_bracket", &mesh) != DP_STATUS_OK) {
        fprintf(stderr, "load: %s\n", dp_last_error_message());
        return 1;
    }
    DpIntrinsics k = {143.0, 143.0, 80.0, 60.0, 160, 120, 0.001};
    DpPose gt = {{1, 0, 0, 0, 1, 0, 0, 0, 1}, {0.0, 0.0, 0.6}};
    DpE2eConfig cfg = dp_e2e_config_default();
    cfg.noise_sigma_rel = 0.005;
    cfg.seed = 11;
    DpE2eResult res;
    DpStatus st = dp_run_e2e(mesh, &gt, &k, &cfg, &res);
    if (st != DP_STATUS_OK) {
        fprintf(stderr, "e2e: %s\n", dp_last_error_message());
        dp_mesh_free(mesh);
        return 1;
    }
    printf("visible=%zu add=%.9f threshold=%.6f\n", res.visible_points, res.add, res.threshold);
    dp_mesh_free(mesh);
    return res.add < res.threshold ? 0 : 2;
}
