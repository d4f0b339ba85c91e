// Dependency-free SVG time-series panels.

import type { Series } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 320;
const HEIGHT = 120;
const PAD = { left: 42, right: 8, top: 10, bottom: 22 };

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  return el;
}

/**
 * Renders one variable as a line over the hourly axis. Null gaps split the
 * line into segments; a series with no observed points renders a
 * "no data" placeholder instead of an empty chart.
 */
export function seriesPanel(
  title: string,
  axis: number[],
  series: Series,
  axisLabel = "ICULOS",
): HTMLElement {
  const panel = document.createElement("div");
  panel.className = "panel";
  const heading = document.createElement("h3");
  heading.textContent = title;
  panel.appendChild(heading);

  const points = axis
    .map((hour, i) => ({ hour, value: series[i] }))
    .filter((p): p is { hour: number; value: number } => p.value !== null && p.value !== undefined);

  if (points.length === 0) {
    const empty = document.createElement("p");
    empty.className = "no-data";
    empty.textContent = "no data";
    panel.appendChild(empty);
    return panel;
  }

  const xMin = axis[0];
  const xMax = axis[axis.length - 1];
  const values = points.map((p) => p.value);
  let yMin = Math.min(...values);
  let yMax = Math.max(...values);
  if (yMin === yMax) {
    yMin -= 1;
    yMax += 1;
  }
  const x = (hour: number) =>
    xMax === xMin
      ? (PAD.left + (WIDTH - PAD.left - PAD.right) / 2)
      : PAD.left + ((hour - xMin) / (xMax - xMin)) * (WIDTH - PAD.left - PAD.right);
  const y = (value: number) =>
    HEIGHT - PAD.bottom - ((value - yMin) / (yMax - yMin)) * (HEIGHT - PAD.top - PAD.bottom);

  const svg = svgEl("svg", {
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    class: "chart",
    role: "img",
  });

  // polyline segments broken at gaps
  let segment: string[] = [];
  const flush = () => {
    if (segment.length >= 2) {
      svg.appendChild(
        svgEl("polyline", { points: segment.join(" "), class: "line" }),
      );
    } else if (segment.length === 1) {
      const [cx, cy] = segment[0].split(",");
      svg.appendChild(svgEl("circle", { cx, cy, r: "2", class: "dot" }));
    }
    segment = [];
  };
  for (const [i, hour] of axis.entries()) {
    const value = series[i];
    if (value === null || value === undefined) {
      flush();
    } else {
      segment.push(`${x(hour).toFixed(1)},${y(value).toFixed(1)}`);
    }
  }
  flush();

  const yLow = svgEl("text", {
    x: "2", y: String(HEIGHT - PAD.bottom), class: "tick",
  });
  yLow.textContent = yMin.toFixed(1);
  const yHigh = svgEl("text", { x: "2", y: String(PAD.top + 8), class: "tick" });
  yHigh.textContent = yMax.toFixed(1);
  const xLabel = svgEl("text", {
    x: String(WIDTH / 2), y: String(HEIGHT - 4), class: "axis-label",
    "text-anchor": "middle",
  });
  xLabel.textContent = axisLabel;
  svg.append(yLow, yHigh, xLabel);

  panel.appendChild(svg);
  const latest = document.createElement("p");
  latest.className = "latest";
  const last = points[points.length - 1];
  latest.textContent = `latest: ${last.value} @ ${axisLabel} ${last.hour}`;
  panel.appendChild(latest);
  return panel;
}
