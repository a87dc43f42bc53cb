/* tslint:disable */
/* eslint-disable */

/**
 * Input Bloch sample and its image under every channel of the experiment:
 * `{"input": [[x,y,z],...], "outputs": {label: [[x,y,z],...]}}`.
 */
export function bloch_clouds(experiment: string, samples: number, raw: boolean): string;

/**
 * Choi matrices of every channel in the experiment as real, imaginary and
 * modulus grids: `{label: {"re": [[..]], "im": [[..]], "abs": [[..]]}}`.
 */
export function choi_heatmaps(experiment: string, raw: boolean): string;

/**
 * Corrected and bare entanglement fidelity over `start:stop:step`:
 * `[{"lambda", "corrected", "uncorrected"}, ...]`.
 */
export function fidelity_curve(lambdas: string, restarts: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bloch_clouds: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly choi_heatmaps: (a: number, b: number, c: number) => [number, number, number, number];
    readonly fidelity_curve: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
