const a = 1; /* inline */ const b = 2; // end
//
// after an empty marker
const re = "\"//\"";
