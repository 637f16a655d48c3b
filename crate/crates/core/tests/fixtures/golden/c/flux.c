#include <stdio.h>

/* Compute the flux.
 * Uses a first-order upwind scheme. */
double flux(double u) {
    const char *fmt = "/* not a comment */ %f // nope";
    return u * 0.5; /* TODO: higher order */
}

// Known issue: unstable for large CFL
// numbers; see the notes
int cfl_check(void);
