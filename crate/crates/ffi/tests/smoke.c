#include <stdio.h>
#include "platonic.h"

int main(void) {
    float values[8] = {0};
    PlatonicVolume *vol = NULL;
    PlatonicImage *img = NULL;
    PlatonicStatus s = platonic_volume_new(1, 2, values, 8, &vol);
    if (s != PLATONIC_STATUS_OK) {
        fprintf(stderr, "%s\n", platonic_last_error_message());
        return 1;
    }
    s = platonic_render(vol, 0.0, 0.0, PLATONIC_FORMATION_VISUAL_HULL, &img);
    platonic_image_free(img);
    platonic_volume_free(vol);
    return s == PLATONIC_STATUS_OK ? 0 : 1;
}
