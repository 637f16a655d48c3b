// Client for the REST API.
// Retries are not implemented.
export const base = "http://localhost:8000"; // default port
const tpl = `
  /* not a comment */ // neither
`;
/** Fetches one item. */
export async function get(id: string) {}
