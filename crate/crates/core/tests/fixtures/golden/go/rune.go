package main

var r = '/' // rune slash
var s = "/*" // open marker in a string
/* Package-level
   block comment. */
