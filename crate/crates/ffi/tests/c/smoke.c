#include <math.h>
#include <stdio.h>
#include <string.h>

#include "sbneuro.h"

int main(void) {
    SbDeviceParams *p = NULL;
    if (sb_device_params_default(&p) != SB_STATUS_OK) return 1;
    double lo = 0.0, hi = 0.0;
    if (sb_drain_current(p, 0.0, 0.0, 1.0, &lo) != SB_STATUS_OK) return 2;
    if (sb_drain_current(p, 3.0, 0.0, 1.0, &hi) != SB_STATUS_OK) return 3;
    if (!(hi > lo && lo > 0.0)) return 4;
    if (sb_drain_current(NULL, 0.0, 0.0, 1.0, &lo) != SB_STATUS_NULL_POINTER) return 5;
    if (strlen(sb_last_error()) == 0) return 6;
    double c_par = 0.0;
    if (sb_fit_parasitic(5.4, 10e-12, 4.7e-9, &c_par) != SB_STATUS_OK) return 7;
    if (fabs(c_par - 1.0559e-9) > 1e-12) return 8;
    sb_device_params_free(p);
    printf("%s\n", sb_version());
    return 0;
}
