/* tslint:disable */
/* eslint-disable */

/**
 * A running preset scenario.
 */
export class Sim {
    free(): void;
    [Symbol.dispose](): void;
    count(): number;
    dt(): number;
    /**
     * `NaN` when the energy is undefined for the current state.
     */
    energy(): number;
    field(nx: number, ny: number, xmin: number, xmax: number, ymin: number, ymax: number): Float64Array;
    method(): string;
    constructor(preset: string);
    /**
     * First two coordinates of every particle, interleaved.
     */
    positions(): Float64Array;
    /**
     * Takes `steps` steps of the preset's integrator and step size.
     */
    step(steps: number): void;
    time(): number;
}

/**
 * `[blob rotation, jet rotation, max discrepancy, sign consistent (0 or 1)]`.
 */
export function compare(delta: number, t_end: number): Float64Array;

/**
 * Comma-separated preset names.
 */
export function presets(): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_sim_free: (a: number, b: number) => void;
    readonly compare: (a: number, b: number) => [number, number, number, number];
    readonly presets: () => [number, number];
    readonly sim_count: (a: number) => number;
    readonly sim_dt: (a: number) => number;
    readonly sim_energy: (a: number) => number;
    readonly sim_field: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly sim_method: (a: number) => [number, number];
    readonly sim_new: (a: number, b: number) => [number, number, number];
    readonly sim_positions: (a: number) => [number, number];
    readonly sim_step: (a: number, b: number) => [number, number];
    readonly sim_time: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
