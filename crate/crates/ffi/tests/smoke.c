#include <math.h>
#include <stdio.h>

#include "cv_teleport.h"

#define CHECK(call)                                                              \
    do {                                                                         \
        CvtStatus status_ = (call);                                              \
        if (status_ != CVT_STATUS_OK) {                                          \
            fprintf(stderr, "%s: %s (%s)\n", #call,                              \
                    cvt_status_description(status_), cvt_last_error());          \
            return 1;                                                            \
        }                                                                        \
    } while (0)

int main(void) {
    CvtSingleMode *cat = NULL;
    CvtTwoMode *resource = NULL;
    CvtDensityMatrix *rho = NULL;
    double probability = 0.0, fidelity = 0.0, bits = 0.0;

    CHECK(cvt_odd_cat_new(0.0, 1.5, 48, &cat));
    CHECK(cvt_subtracted_tmsv_new(0.8178, 1, 1, 0.15, 0.15, 48, &resource, &probability));
    CHECK(cvt_two_mode_entropy(resource, &bits));
    CHECK(cvt_teleport_average(cat, resource, 8.0, 64, &rho));
    CHECK(cvt_density_matrix_fidelity(rho, cat, &fidelity));

    if (cvt_tmsv_new(2.0, 16, &resource) != CVT_STATUS_INVALID_ARGUMENT || cvt_last_error() == NULL) {
        fprintf(stderr, "expected an invalid-argument status\n");
        return 1;
    }

    printf("probability=%.6f entropy=%.6f fidelity=%.6f\n", probability, bits, fidelity);
    cvt_density_matrix_free(rho);
    cvt_two_mode_free(resource);
    cvt_single_mode_free(cat);
    return fabs(fidelity - 0.7448) < 0.002 ? 0 : 2;
}
