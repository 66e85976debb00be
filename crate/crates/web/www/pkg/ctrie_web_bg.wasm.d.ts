/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_triedemo_free: (a: number, b: number) => void;
export const triedemo_insert: (a: number, b: number, c: number) => void;
export const triedemo_keys: (a: number) => [number, number];
export const triedemo_lookup: (a: number, b: number) => number;
export const triedemo_new: () => number;
export const triedemo_path: (a: number, b: number) => [number, number];
export const triedemo_remove: (a: number, b: number) => number;
export const triedemo_snapshot: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
