package main

// main wires the solver together.
// TODO: read the grid size from flags
func main() {
	x := "// not a comment"
	_ = x // keep the compiler quiet
}
