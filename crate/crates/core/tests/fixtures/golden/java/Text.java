class Text {
    String t = """
        // inside a text block
        /* also inside */
        """;
    // after the text block
    // second line
}
