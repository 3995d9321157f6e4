import init, { learn_explicit, permutation_dag, simulate_compare } from "./pkg/sp_web.js";

const SVG = "http://www.w3.org/2000/svg";
const $ = (id) => document.getElementById(id);

function el(name, attrs, text) {
  const e = document.createElementNS(SVG, name);
  for (const [k, v] of Object.entries(attrs)) e.setAttribute(k, v);
  if (text !== undefined) e.textContent = text;
  return e;
}

// Circular layout; directed edges get arrowheads, undirected ones do not.
// Edges listed in `marked` are drawn in red, `missing` ones dashed grey.
function drawGraph({ p, base, directed = [], undirected = [], marked = [], missing = [] }) {
  const size = 240, r = 90, c = size / 2, rad = 14;
  const svg = el("svg", { viewBox: `0 0 ${size} ${size}` });
  const defs = el("defs", {});
  const marker = el("marker", { id: "arrow", viewBox: "0 0 10 10", refX: 10, refY: 5, markerWidth: 7, markerHeight: 7, orient: "auto" });
  marker.appendChild(el("path", { d: "M0,0 L10,5 L0,10 z", fill: "#333" }));
  defs.appendChild(marker);
  svg.appendChild(defs);
  const pos = (v) => {
    const t = (2 * Math.PI * (v - base)) / p - Math.PI / 2;
    return [c + r * Math.cos(t), c + r * Math.sin(t)];
  };
  const key = ([a, b]) => (a < b ? `${a}-${b}` : `${b}-${a}`);
  const red = new Set(marked.map(key));
  const line = ([a, b], arrow, extra = {}) => {
    const [x1, y1] = pos(a), [x2, y2] = pos(b);
    const d = Math.hypot(x2 - x1, y2 - y1);
    const ux = (x2 - x1) / d, uy = (y2 - y1) / d;
    const attrs = {
      x1: x1 + ux * rad, y1: y1 + uy * rad, x2: x2 - ux * rad, y2: y2 - uy * rad,
      stroke: red.has(key([a, b])) ? "#c22" : "#333", "stroke-width": 1.6, ...extra,
    };
    if (arrow) attrs["marker-end"] = "url(#arrow)";
    svg.appendChild(el("line", attrs));
  };
  missing.forEach((e) => line(e, false, { stroke: "#aaa", "stroke-dasharray": "4 3" }));
  undirected.forEach((e) => line(e, false));
  directed.forEach((e) => line(e, true));
  for (let v = base; v < base + p; v++) {
    const [x, y] = pos(v);
    svg.appendChild(el("circle", { cx: x, cy: y, r: rad, fill: "#eef3fb", stroke: "#246" }));
    svg.appendChild(el("text", { x, y: y + 4, "text-anchor": "middle", "font-size": 12 }, String(v)));
  }
  return svg;
}

// Pattern drawing: edges in a v-structure point into the collider.
function patternEdges(pattern) {
  const into = new Map();
  for (const [a, m, b] of pattern.v_structures) {
    into.set(`${a}-${m}`, true);
    into.set(`${b}-${m}`, true);
  }
  const directed = [], undirected = [];
  for (const [a, b] of pattern.skeleton) {
    if (into.has(`${a}-${b}`)) directed.push([a, b]);
    else if (into.has(`${b}-${a}`)) directed.push([b, a]);
    else undirected.push([a, b]);
  }
  return { directed, undirected };
}

function panel(title, svg, note) {
  const div = document.createElement("div");
  const fig = document.createElement("figure");
  fig.appendChild(svg);
  const cap = document.createElement("figcaption");
  cap.innerHTML = `<b>${title}</b>${note ? "<br>" + note : ""}`;
  fig.appendChild(cap);
  div.appendChild(fig);
  return div;
}

function show(out, json, render) {
  out.replaceChildren();
  const r = JSON.parse(json);
  if (r.error) {
    const p = document.createElement("p");
    p.className = "err";
    p.textContent = r.error;
    out.appendChild(p);
    return;
  }
  render(r).forEach((node) => out.appendChild(node));
}

function comparison(r) {
  const truthSkel = new Set(r.truth.pattern.skeleton.map(([a, b]) => `${a}-${b}`));
  const diff = (skel) => {
    const have = new Set(skel.map(([a, b]) => `${a}-${b}`));
    return {
      marked: skel.filter(([a, b]) => !truthSkel.has(`${a}-${b}`)),
      missing: r.truth.pattern.skeleton.filter(([a, b]) => !have.has(`${a}-${b}`)),
    };
  };
  const nodes = [panel("true graph", drawGraph({ p: r.p, base: r.base, directed: r.truth.edges }),
    `${r.truth.edges.length} edges`)];
  r.sp.classes.forEach((cls, i) => {
    nodes.push(panel(`SP class ${i + 1} of ${r.sp.classes.length}`,
      drawGraph({ p: r.p, base: r.base, ...patternEdges(cls), ...diff(cls.skeleton) }),
      `${r.sp.min_edges} edges; ${r.sp.optimal_permutations} of ${r.sp.permutations_scanned} orderings optimal`));
  });
  for (const m of ["sgs", "pc"]) {
    const cls = r[m].classes[0];
    nodes.push(panel(m.toUpperCase(), drawGraph({ p: r.p, base: r.base, ...patternEdges(cls), ...diff(cls.skeleton) }),
      `${r[m].edge_count} edges, ${r[m].tests} tests, ${r[m].recovered ? "skeleton recovered" : "skeleton wrong"}`));
  }
  return nodes;
}

await init();

$("learn").onclick = () => show($("learn-out"), learn_explicit($("dag").value, $("ci").value), comparison);

$("perm").onclick = () =>
  show($("perm-out"), permutation_dag($("dag").value, $("ci").value, $("order").value), (r) => {
    const p = r.order.length;
    const base = Math.min(...r.order);
    return [panel(`G for ordering (${r.order.join(", ")})`, drawGraph({ p, base, directed: r.edges }),
      `${r.edge_count} edges`)];
  });

$("sim").onclick = () =>
  show($("sim-out"), simulate_compare(+$("sim-p").value, +$("sim-nbhd").value, +$("sim-n").value,
    +$("sim-alpha").value, BigInt($("sim-seed").value)), comparison);
