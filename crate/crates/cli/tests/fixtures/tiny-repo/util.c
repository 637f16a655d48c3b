/* Utility helpers. */
int clamp(int x) { return x; } // FIXME: bounds are ignored
