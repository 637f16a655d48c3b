#ifndef UTIL_H
#define UTIL_H
// helpers shared by the solvers
#define QUOTE '"' /* quote char */
int clamp(int x); // FIXME: overflow when x == INT_MIN
#endif
