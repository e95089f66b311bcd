// Entry point: load the hosted model, then wire viewer, store and panel.

import { ApiClient } from './api.js';
import { buildPanel } from './panel.js';
import { BlendStore } from './store.js';
import { Viewer } from './viewer.js';

function banner(message: string, onRetry: () => void): void {
    const node = document.getElementById('banner') as HTMLElement;
    node.textContent = '';
    node.hidden = false;
    const text = document.createElement('span');
    text.textContent = message;
    const retry = document.createElement('button');
    retry.textContent = 'retry';
    retry.addEventListener('click', () => {
        node.hidden = true;
        onRetry();
    });
    node.appendChild(text);
    node.appendChild(retry);
}

async function start(): Promise<void> {
    const client = new ApiClient('');
    try {
        const session = await client.session();
        const rest = await client.mesh(0);

        const canvas = document.getElementById('viewport') as HTMLCanvasElement;
        const viewer = new Viewer(canvas);
        viewer.setMesh(rest.vertices, rest.faces);

        const store = new BlendStore(client, session.m, rest.vertices);
        const panelRoot = document.getElementById('panel') as HTMLElement;
        const panel = buildPanel(panelRoot, session, store, (on) => viewer.setWireframe(on));

        store.subscribe((state) => {
            panel.update(state);
            if (state.error === null) {
                viewer.updateVertices(state.vertices);
            }
        });
        panel.update(store.getState());
    } catch (err) {
        const message = err instanceof Error ? err.message : String(err);
        banner(`failed to reach the blend service: ${message}`, () => void start());
    }
}

void start();
