/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_sim_free: (a: number, b: number) => void;
export const compare: (a: number, b: number) => [number, number, number, number];
export const presets: () => [number, number];
export const sim_count: (a: number) => number;
export const sim_dt: (a: number) => number;
export const sim_energy: (a: number) => number;
export const sim_field: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const sim_method: (a: number) => [number, number];
export const sim_new: (a: number, b: number) => [number, number, number];
export const sim_positions: (a: number) => [number, number];
export const sim_step: (a: number, b: number) => [number, number];
export const sim_time: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
