export type Choice = 'left' | 'right';

export type SessionInfo = {
  session_id: string;
  annotator: string;
  cursor: number;
  total: number;
};

export type PairPayload = {
  pair_id: string;
  left: string;
  right: string;
  index: number;
  total: number;
};

export type NextResponse = PairPayload | { done: true; total: number };

export type DisplayMode = 'side-by-side' | 'flicker';

export type UiPairView = {
  pairId: string;
  leftUrl: string;
  rightUrl: string;
  mode: DisplayMode;
  flickerSide: Choice;
  answered: number;
  total: number;
};

export function isDone(next: NextResponse): next is { done: true; total: number } {
  return (next as { done?: boolean }).done === true;
}
