// Control panel: weight sliders with free numeric entry, solver selectors,
// wireframe toggle, and a report strip that doubles as the error display.

import { SessionInfo } from './api.js';
import { BlendStore, UiState } from './store.js';

const SLIDER_MIN = -1;
const SLIDER_MAX = 2;

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) {
        node.className = className;
    }
    if (text !== undefined) {
        node.textContent = text;
    }
    return node;
}

interface WeightRow {
    slider: HTMLInputElement;
    box: HTMLInputElement;
}

export interface Panel {
    update(state: UiState): void;
}

export function buildPanel(
    root: HTMLElement,
    session: SessionInfo,
    store: BlendStore,
    onWireframe: (on: boolean) => void,
): Panel {
    root.textContent = '';
    const rows: WeightRow[] = [];

    const title = el('h1', 'panel-title', 'tetriblend');
    root.appendChild(title);

    const stats = el('div', 'panel-stats');
    stats.textContent =
        `${session.vertexCount} vertices, ${session.faceCount} faces, ` +
        `${session.tetCount} tets (${session.method} tetrisation)`;
    root.appendChild(stats);

    const weightsBox = el('div', 'panel-section');
    weightsBox.appendChild(el('h2', 'panel-heading', 'target weights'));
    for (let j = 0; j < session.m; j++) {
        const name = session.shapeNames.length === session.m + 1
            ? session.shapeNames[j + 1]
            : `target ${j + 1}`;
        const row = el('div', 'weight-row');
        const label = el('label', 'weight-label', name);
        const slider = el('input') as HTMLInputElement;
        slider.type = 'range';
        slider.min = String(SLIDER_MIN);
        slider.max = String(SLIDER_MAX);
        slider.step = '0.01';
        slider.value = '0';
        const box = el('input', 'weight-box') as HTMLInputElement;
        box.type = 'number';
        box.step = '0.05';
        box.value = '0';
        slider.addEventListener('input', () => {
            store.setWeight(j, Number(slider.value));
        });
        box.addEventListener('input', () => {
            const v = Number(box.value);
            if (Number.isFinite(v)) {
                store.setWeight(j, v);
            }
        });
        row.appendChild(label);
        row.appendChild(slider);
        row.appendChild(box);
        weightsBox.appendChild(row);
        rows.push({ slider, box });
    }
    root.appendChild(weightsBox);

    const solverBox = el('div', 'panel-section');
    solverBox.appendChild(el('h2', 'panel-heading', 'solver'));

    const energySelect = el('select') as HTMLSelectElement;
    for (const [value, text] of [['ET', 'ET (one solve)'], ['ES', 'ES (local-global)']]) {
        const opt = el('option', undefined, text) as HTMLOptionElement;
        opt.value = value;
        energySelect.appendChild(opt);
    }
    energySelect.addEventListener('change', () => {
        store.setEnergy(energySelect.value as 'ET' | 'ES');
    });
    solverBox.appendChild(labelled('stitch energy', energySelect));

    const fnSelect = el('select') as HTMLSelectElement;
    for (const [value, text] of [['C', 'C (continuous log)'], ['P', 'P (principal log)']]) {
        const opt = el('option', undefined, text) as HTMLOptionElement;
        opt.value = value;
        fnSelect.appendChild(opt);
    }
    fnSelect.addEventListener('change', () => {
        store.setBlendFn(fnSelect.value as 'C' | 'P');
    });
    solverBox.appendChild(labelled('blend function', fnSelect));

    // the service hosts one fixed model, so the method is display-only
    const methodSelect = el('select') as HTMLSelectElement;
    const methodOpt = el('option', undefined, session.method) as HTMLOptionElement;
    methodSelect.appendChild(methodOpt);
    methodSelect.disabled = true;
    solverBox.appendChild(labelled('tetrisation', methodSelect));

    const wire = el('input') as HTMLInputElement;
    wire.type = 'checkbox';
    wire.addEventListener('change', () => onWireframe(wire.checked));
    solverBox.appendChild(labelled('wireframe', wire));

    root.appendChild(solverBox);

    const report = el('div', 'panel-section report');
    root.appendChild(report);

    function update(state: UiState): void {
        for (let j = 0; j < rows.length; j++) {
            const w = state.weights[j];
            const clamped = Math.min(SLIDER_MAX, Math.max(SLIDER_MIN, w));
            if (document.activeElement !== rows[j].slider) {
                rows[j].slider.value = String(clamped);
            }
            if (document.activeElement !== rows[j].box) {
                rows[j].box.value = String(w);
            }
        }
        energySelect.value = state.energy;
        fnSelect.value = state.blendFn;

        report.textContent = '';
        report.classList.toggle('report-error', state.error !== null);
        if (state.error !== null) {
            report.appendChild(el('div', 'report-line', `error: ${state.error}`));
            return;
        }
        if (state.report === null) {
            report.appendChild(el('div', 'report-line', 'rest pose (no solve yet)'));
            return;
        }
        const r = state.report;
        report.appendChild(el('div', 'report-line', `energy ${r.energy.toExponential(4)}`));
        report.appendChild(el('div', 'report-line',
            `${r.iterations} iteration(s), ${r.converged ? 'converged' : 'hit the cap'}`));
        const latency = state.latencyMs === null ? '' : `, ${state.latencyMs.toFixed(1)} ms round trip`;
        report.appendChild(el('div', 'report-line', `${r.millis.toFixed(1)} ms solve${latency}`));
        if (state.pending) {
            report.appendChild(el('div', 'report-line report-pending', 'updating...'));
        }
    }

    return { update };
}

function labelled(text: string, control: HTMLElement): HTMLElement {
    const row = el('div', 'control-row');
    row.appendChild(el('label', 'control-label', text));
    row.appendChild(control);
    return row;
}
