import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { ApiError, BlendParams, BlendResult } from '../src/api.js';
import { BlendStore } from '../src/store.js';

const REST = [0, 0, 0, 1, 0, 0, 0, 1, 0];

function result(tag: number): BlendResult {
    return {
        vertices: [tag, 0, 0, 1, 0, 0, 0, 1, 0],
        report: { energy: 1e-8, iterations: 1, converged: true, millis: 2.0 },
    };
}

function deferred<T>() {
    let resolve!: (value: T) => void;
    let reject!: (reason: unknown) => void;
    const promise = new Promise<T>((res, rej) => {
        resolve = res;
        reject = rej;
    });
    return { promise, resolve, reject };
}

describe('BlendStore', () => {
    beforeEach(() => {
        vi.useFakeTimers();
    });
    afterEach(() => {
        vi.useRealTimers();
    });

    it('starts from the rest buffer without issuing a request', () => {
        const blend = vi.fn();
        const store = new BlendStore({ blend }, 2, REST);
        expect(store.getState().vertices).toEqual(REST);
        expect(store.getState().weights).toEqual([0, 0]);
        expect(blend).not.toHaveBeenCalled();
    });

    it('coalesces a burst of slider edits into one request with the final weights', async () => {
        const calls: BlendParams[] = [];
        const blend = vi.fn(async (params: BlendParams) => {
            calls.push(params);
            return result(1);
        });
        const store = new BlendStore({ blend }, 2, REST);
        for (let k = 1; k <= 10; k++) {
            store.setWeight(0, k / 10);
            await vi.advanceTimersByTimeAsync(5);
        }
        store.setWeight(1, -0.25);
        await vi.advanceTimersByTimeAsync(75);
        expect(blend).toHaveBeenCalledTimes(1);
        expect(calls[0]).toEqual({ weights: [1.0, -0.25], energy: 'ET', blendFn: 'C' });
        expect(store.getState().vertices).toEqual(result(1).vertices);
        expect(store.getState().pending).toBe(false);
    });

    it('discards a stale response that arrives after a newer one', async () => {
        const first = deferred<BlendResult>();
        const second = deferred<BlendResult>();
        const pending = [first, second];
        const blend = vi.fn(() => pending.shift()!.promise);
        const store = new BlendStore({ blend }, 1, REST);

        store.setWeight(0, 0.3);
        await vi.advanceTimersByTimeAsync(75);
        store.setWeight(0, 0.9);
        await vi.advanceTimersByTimeAsync(75);
        expect(blend).toHaveBeenCalledTimes(2);

        second.resolve(result(2));
        await vi.advanceTimersByTimeAsync(0);
        expect(store.getState().vertices).toEqual(result(2).vertices);

        first.resolve(result(1));
        await vi.advanceTimersByTimeAsync(0);
        expect(store.getState().vertices).toEqual(result(2).vertices);
        expect(store.getState().error).toBeNull();
    });

    it('re-requests with unchanged weights when a selector changes', async () => {
        const calls: BlendParams[] = [];
        const blend = vi.fn(async (params: BlendParams) => {
            calls.push(params);
            return result(calls.length);
        });
        const store = new BlendStore({ blend }, 2, REST);
        store.setWeights([0.4, 0.6]);
        await vi.advanceTimersByTimeAsync(75);
        store.setEnergy('ES');
        await vi.advanceTimersByTimeAsync(75);
        store.setBlendFn('P');
        await vi.advanceTimersByTimeAsync(75);
        expect(calls).toEqual([
            { weights: [0.4, 0.6], energy: 'ET', blendFn: 'C' },
            { weights: [0.4, 0.6], energy: 'ES', blendFn: 'C' },
            { weights: [0.4, 0.6], energy: 'ES', blendFn: 'P' },
        ]);
    });

    it('setting a selector to its current value does not re-request', async () => {
        const blend = vi.fn(async () => result(1));
        const store = new BlendStore({ blend }, 1, REST);
        store.setEnergy('ET');
        store.setBlendFn('C');
        await vi.advanceTimersByTimeAsync(200);
        expect(blend).not.toHaveBeenCalled();
    });

    it('keeps the previous vertices and stays usable when the service errors', async () => {
        let fail = true;
        const blend = vi.fn(async (params: BlendParams) => {
            if (fail) {
                throw new ApiError(422, `expected 1 weights, got ${params.weights.length}`);
            }
            return result(7);
        });
        const store = new BlendStore({ blend }, 1, REST);

        store.setWeight(0, 0.5);
        await vi.advanceTimersByTimeAsync(75);
        expect(store.getState().error).toBe('expected 1 weights, got 1');
        expect(store.getState().vertices).toEqual(REST);

        fail = false;
        store.setWeight(0, 0.6);
        await vi.advanceTimersByTimeAsync(75);
        expect(store.getState().error).toBeNull();
        expect(store.getState().vertices).toEqual(result(7).vertices);
    });

    it('passes weights outside [0, 1] through unclamped', async () => {
        const calls: BlendParams[] = [];
        const blend = vi.fn(async (params: BlendParams) => {
            calls.push(params);
            return result(1);
        });
        const store = new BlendStore({ blend }, 1, REST);
        store.setWeight(0, 1.5);
        await vi.advanceTimersByTimeAsync(75);
        expect(calls[0].weights).toEqual([1.5]);
    });

    it('flush sends immediately without waiting out the debounce window', async () => {
        const blend = vi.fn(async () => result(3));
        const store = new BlendStore({ blend }, 1, REST);
        store.setWeight(0, 0.2);
        await store.flush();
        expect(blend).toHaveBeenCalledTimes(1);
        expect(store.getState().vertices).toEqual(result(3).vertices);
        await vi.advanceTimersByTimeAsync(200);
        expect(blend).toHaveBeenCalledTimes(1);
    });

    it('ignores non-finite slider input and rejects out-of-range indices', () => {
        const blend = vi.fn();
        const store = new BlendStore({ blend }, 1, REST);
        store.setWeight(0, NaN);
        expect(store.getState().weights).toEqual([0]);
        expect(() => store.setWeight(3, 0.5)).toThrow(RangeError);
        expect(() => store.setWeights([1, 2])).toThrow(RangeError);
    });
});
