#include <stdio.h>
#include <string.h>
#include "cscode.h"

int main(void) {
    double c = 0.0;
    if (cs_capacity("dcfree:5", &c) != CS_STATUS_OK || c < 0.792 || c > 0.793) return 1;
    if (cs_capacity("bogus", &c) != CS_STATUS_INVALID_ARGUMENT) return 2;
    if (strlen(cs_last_error_message()) == 0) return 3;

    CsVlCodebook *vl = NULL;
    if (cs_vl_codebook_load("builtin:rll13", &vl) != CS_STATUS_OK) return 4;
    const uint8_t rx[9] = {0, 1, 0, 0, 1, 1, 0, 0, 1};
    uint8_t out[16];
    size_t n = 0;
    if (cs_vl_decode_resync(vl, 0, 0, rx, 9, out, sizeof out, &n) != CS_STATUS_OK) return 5;
    const uint8_t want[5] = {0, 1, 0, 1, 0};
    if (n != 5 || memcmp(out, want, 5) != 0) return 6;
    cs_vl_codebook_free(vl);

    CsFlCodebook *fl = NULL;
    if (cs_fl_codebook_load("builtin:4b6b", 1, -1, &fl) != CS_STATUS_OK) return 7;
    const uint8_t src[4] = {1, 0, 1, 1};
    uint8_t cw[6];
    if (cs_fl_encode(fl, src, 4, cw, 0, &n) != CS_STATUS_BUFFER_TOO_SMALL || n != 6) return 8;
    if (cs_fl_encode(fl, src, 4, cw, 6, &n) != CS_STATUS_OK) return 9;
    uint8_t back[4];
    if (cs_fl_lut_decode(fl, cw, 6, back, 4, &n) != CS_STATUS_OK || memcmp(back, src, 4) != 0) return 10;
    cs_fl_codebook_free(fl);
    puts("ok");
    return 0;
}
