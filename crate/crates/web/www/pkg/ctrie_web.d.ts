/* tslint:disable */
/* eslint-disable */

export class TrieDemo {
    free(): void;
    [Symbol.dispose](): void;
    insert(key: number, value: number): void;
    /**
     * Keys currently stored, ascending.
     */
    keys(): Uint32Array;
    lookup(key: number): number | undefined;
    constructor();
    /**
     * Bitmap indices followed by a lookup of `key`, as a JSON array.
     */
    path(key: number): string;
    remove(key: number): number | undefined;
    /**
     * JSON with the node tree, the state counts and the invariant report.
     */
    snapshot(): string;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_triedemo_free: (a: number, b: number) => void;
    readonly triedemo_insert: (a: number, b: number, c: number) => void;
    readonly triedemo_keys: (a: number) => [number, number];
    readonly triedemo_lookup: (a: number, b: number) => number;
    readonly triedemo_new: () => number;
    readonly triedemo_path: (a: number, b: number) => [number, number];
    readonly triedemo_remove: (a: number, b: number) => number;
    readonly triedemo_snapshot: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
