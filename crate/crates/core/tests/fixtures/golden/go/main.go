package main

// main starts the server.
// It never returns.
func main() {
	raw := `// not a comment
/* nor this */`
	_ = raw // used
}
