/**
 * Text segmentation rules shared by capture and its tests.
 *
 * Words are whitespace-delimited tokens with punctuation attached.  The page
 * text is the word sequence joined with single spaces, so each word's
 * character index satisfies page_text.slice(char, char + len) === text.
 * A sentence ends at '.', '!' or '?' that closes a token (i.e. is followed
 * by whitespace or the end of the text); the index increments after it.
 */

export interface Token {
  text: string;
  /** Char offset of the token inside its source string. */
  offset: number;
}

const SENTENCE_END = /[.!?]$/;

export function tokenize(text: string): Token[] {
  const out: Token[] = [];
  const re = /\S+/g;
  let m: RegExpExecArray | null;
  while ((m = re.exec(text)) !== null) {
    out.push({ text: m[0], offset: m.index });
  }
  return out;
}

export function endsSentence(word: string): boolean {
  return SENTENCE_END.test(word);
}

export interface IndexedWord {
  text: string;
  charIndex: number;
  sentenceIndex: number;
}

/** Assign char and sentence indices to a whole-page word sequence. */
export function indexWords(words: string[]): { pageText: string; indexed: IndexedWord[] } {
  const indexed: IndexedWord[] = [];
  let char = 0;
  let sentence = 0;
  for (const text of words) {
    indexed.push({ text, charIndex: char, sentenceIndex: sentence });
    char += text.length + 1;
    if (endsSentence(text)) sentence += 1;
  }
  return { pageText: words.join(" "), indexed };
}
