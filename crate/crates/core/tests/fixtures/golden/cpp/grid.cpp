#include <vector>
// Grid container.
// Stores cells row-major.
class Grid {
  std::string name = "http://example.org"; // url, not a comment start
  int n = 1'000; // digit separator
  /* hack: assume square */
};
