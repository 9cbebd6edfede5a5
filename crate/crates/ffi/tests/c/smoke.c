#include <math.h>
#include <stdio.h>
#include "outer_billiard.h"

int main(void) {
    ObCurve *curve = NULL;
    if (ob_curve_from_json("{\"kind\":\"circle\",\"radius\":1.0}", &curve) != OB_STATUS_OK) {
        return 1;
    }
    double x = 2.0, y = 0.0;
    for (int i = 0; i < 3; i++) {
        double nx, ny;
        if (ob_map_step(curve, x, y, false, &nx, &ny) != OB_STATUS_OK) {
            return 2;
        }
        x = nx;
        y = ny;
    }
    if (fabs(x - 2.0) > 1e-12 || fabs(y) > 1e-12) {
        return 3;
    }
    double nx, ny;
    if (ob_map_step(curve, 0.5, 0.0, false, &nx, &ny) != OB_STATUS_DYNAMICS_FAILURE) {
        return 4;
    }
    char *msg = ob_last_error();
    printf("%s\n", msg);
    ob_string_free(msg);
    ob_curve_free(curve);
    return 0;
}
