/**
 * Entry point.
 * @author nobody
 */
public class Main {
    // TODO: parse flags
    public static void main(String[] args) {
        String s = "/* still a string */";
        char c = '"'; // quote
    }
}
