// Package doc has only comments.
//
// Second paragraph.
package doc

// Deprecated: use New instead.
func Old() {}
