class Calc {
    int f(int x) { return x /* half */ / 2; }
    /* a */ /* b */
    // c
}
