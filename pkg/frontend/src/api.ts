import type { Choice, NextResponse, SessionInfo } from './types';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Outcome of a choice submission. A duplicate rejection means the server
 * already holds this event, so the client treats it as recorded. */
export type SubmitOutcome = 'recorded' | 'duplicate';

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

export type ApiClient = {
  startSession(annotator: string): Promise<SessionInfo>;
  nextPair(sessionId: string): Promise<NextResponse>;
  submitChoice(sessionId: string, pairId: string, choice: Choice): Promise<SubmitOutcome>;
  imageUrl(ref: string): string;
};

export function createApiClient(fetchFn: FetchLike, baseUrl = ''): ApiClient {
  const getJson = async (url: string) => {
    const resp = await fetchFn(baseUrl + url);
    if (!resp.ok) {
      throw new ApiError(`GET ${url} failed (${resp.status})`, resp.status);
    }
    return resp.json();
  };

  return {
    async startSession(annotator: string): Promise<SessionInfo> {
      return getJson(`/api/session?annotator=${encodeURIComponent(annotator)}`);
    },

    async nextPair(sessionId: string): Promise<NextResponse> {
      return getJson(`/api/session/${sessionId}/next`);
    },

    async submitChoice(sessionId: string, pairId: string, choice: Choice): Promise<SubmitOutcome> {
      const resp = await fetchFn(`${baseUrl}/api/session/${sessionId}/choice`, {
        method: 'POST',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify({ pair_id: pairId, choice }),
      });
      if (resp.status === 409) {
        return 'duplicate';
      }
      if (!resp.ok) {
        throw new ApiError(`choice submission failed (${resp.status})`, resp.status);
      }
      return 'recorded';
    },

    imageUrl(ref: string): string {
      return `${baseUrl}/api/image/${ref}`;
    },
  };
}
