/* tslint:disable */
/* eslint-disable */

/**
 * JSON of [`check_grammar`].
 */
export function checkGrammar(source: string): string;

/**
 * The shipped grammars, for the page's editor: `{"coarse": .., "husband": ..}`.
 */
export function exampleGrammars(): string;

/**
 * JSON of [`prior_demo`].
 */
export function priorDemo(anna_share: number, prior_scale: number): string;

/**
 * JSON of [`record_demo`]; `beam` 0 means unbounded.
 */
export function recordDemo(seed: number, noise: number, beam: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly checkGrammar: (a: number, b: number) => [number, number];
    readonly exampleGrammars: () => [number, number];
    readonly priorDemo: (a: number, b: number) => [number, number];
    readonly recordDemo: (a: number, b: number, c: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
