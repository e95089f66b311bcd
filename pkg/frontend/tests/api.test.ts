import { describe, expect, it } from 'vitest';

import { ApiClient, ApiError, FetchLike } from '../src/api.js';

function jsonResponse(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), {
        status,
        headers: { 'Content-Type': 'application/json' },
    });
}

describe('ApiClient', () => {
    it('fetches the session summary', async () => {
        const payload = {
            m: 2,
            vertexCount: 42,
            faceCount: 80,
            tetCount: 80,
            method: 'face',
            shapeNames: ['rest', 'bent', 'twisted'],
        };
        const calls: string[] = [];
        const fetchFn: FetchLike = async (url) => {
            calls.push(String(url));
            return jsonResponse(200, payload);
        };
        const client = new ApiClient('http://example.test', fetchFn);
        const session = await client.session();
        expect(session).toEqual(payload);
        expect(calls).toEqual(['http://example.test/api/session']);
    });

    it('fetches a mesh by index', async () => {
        const payload = { vertices: [0, 0, 0, 1, 0, 0, 0, 1, 0], faces: [0, 1, 2] };
        const fetchFn: FetchLike = async (url) => {
            expect(String(url)).toBe('/api/mesh/1');
            return jsonResponse(200, payload);
        };
        const client = new ApiClient('', fetchFn);
        const mesh = await client.mesh(1);
        expect(mesh.vertices).toEqual(payload.vertices);
        expect(mesh.faces).toEqual(payload.faces);
    });

    it('posts the full blend parameter set as JSON', async () => {
        let captured: { url: string; method?: string; body?: unknown } | null = null;
        const fetchFn: FetchLike = async (url, init) => {
            captured = {
                url: String(url),
                method: init?.method,
                body: JSON.parse(String(init?.body)),
            };
            return jsonResponse(200, {
                vertices: [1, 2, 3],
                report: { energy: 0.5, iterations: 3, converged: true, millis: 1.5 },
            });
        };
        const client = new ApiClient('', fetchFn);
        const result = await client.blend({ weights: [0.25, -0.5], energy: 'ES', blendFn: 'P' });
        expect(captured).toEqual({
            url: '/api/blend',
            method: 'POST',
            body: { weights: [0.25, -0.5], energy: 'ES', blendFn: 'P' },
        });
        expect(result.vertices).toEqual([1, 2, 3]);
        expect(result.report.iterations).toBe(3);
        expect(result.report.converged).toBe(true);
    });

    it('turns service error payloads into ApiError with the status code', async () => {
        const fetchFn: FetchLike = async () =>
            jsonResponse(422, { error: 'expected 2 weights, got 1' });
        const client = new ApiClient('', fetchFn);
        const err = await client.blend({ weights: [1], energy: 'ET', blendFn: 'C' })
            .then(() => null, (e: unknown) => e);
        expect(err).toBeInstanceOf(ApiError);
        expect((err as ApiError).status).toBe(422);
        expect((err as ApiError).message).toBe('expected 2 weights, got 1');
    });

    it('falls back to the status line when the error body is not JSON', async () => {
        const fetchFn: FetchLike = async () =>
            new Response('<html>boom</html>', { status: 500, statusText: 'Internal Server Error' });
        const client = new ApiClient('', fetchFn);
        const err = await client.session().then(() => null, (e: unknown) => e);
        expect(err).toBeInstanceOf(ApiError);
        expect((err as ApiError).status).toBe(500);
        expect((err as ApiError).message).toContain('500');
    });
});
