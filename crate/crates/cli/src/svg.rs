//! Dependency-free SVG bar chart for population saliency: one bar per node
//! (top-k occurrence count) overlaid with per-class scaled mean-activation
//! markers.

use graphcam::saliency::PopulationSaliency;

const WIDTH: f64 = 1000.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 70.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

const CLASS_COLORS: [&str; 6] = [
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub fn render(saliency: &PopulationSaliency<f64>, class_names: &[String]) -> String {
    let nodes = saliency.topk_counts.len();
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let max_count = saliency.topk_counts.iter().copied().max().unwrap_or(0).max(1);
    let slot = plot_w / nodes as f64;
    let bar_w = slot * 0.6;

    let x_of = |node: usize| MARGIN_LEFT + slot * (node as f64 + 0.5);
    let y_of_count = |count: u64| {
        MARGIN_TOP + plot_h * (1.0 - count as f64 / max_count as f64)
    };
    let y_of_activation = |a: f64| MARGIN_TOP + plot_h * (1.0 - a);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str("  <style>text { font-family: sans-serif; font-size: 11px; }</style>\n");
    out.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"20\" font-size=\"14\">Population saliency: top-{} occurrences (bars) and scaled mean activation (markers)</text>\n",
        MARGIN_LEFT, saliency.k
    ));

    // Axes.
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = MARGIN_TOP + plot_h;
    out.push_str(&format!(
        "  <line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y0:.2}\" stroke=\"black\"/>\n"
    ));
    out.push_str(&format!(
        "  <line x1=\"{x0:.2}\" y1=\"{MARGIN_TOP:.2}\" x2=\"{x0:.2}\" y2=\"{y0:.2}\" stroke=\"black\"/>\n"
    ));
    out.push_str(&format!(
        "  <line x1=\"{x1:.2}\" y1=\"{MARGIN_TOP:.2}\" x2=\"{x1:.2}\" y2=\"{y0:.2}\" stroke=\"black\"/>\n"
    ));
    out.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
        x0 - 6.0,
        MARGIN_TOP + 4.0,
        max_count
    ));
    out.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">0</text>\n",
        x0 - 6.0,
        y0 + 4.0
    ));
    out.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\">1.0</text>\n",
        x1 + 6.0,
        MARGIN_TOP + 4.0
    ));
    out.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\">0.0</text>\n",
        x1 + 6.0,
        y0 + 4.0
    ));
    out.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">node</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    ));

    // Bars: one per node.
    for (node, &count) in saliency.topk_counts.iter().enumerate() {
        let x = x_of(node) - bar_w / 2.0;
        let y = y_of_count(count);
        let h = y0 - y;
        out.push_str(&format!(
            "  <rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{bar_w:.2}\" height=\"{h:.2}\" fill=\"#bbbbbb\"><title>node {node}: {count}</title></rect>\n"
        ));
        out.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{node}</text>\n",
            x_of(node),
            y0 + 16.0
        ));
    }

    // Activation markers per class.
    for class in 0..saliency.mean_activation.nrows() {
        let color = CLASS_COLORS[class % CLASS_COLORS.len()];
        for node in 0..nodes {
            let y = y_of_activation(saliency.mean_activation[[class, node]]);
            out.push_str(&format!(
                "  <circle cx=\"{:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"{color}\" fill-opacity=\"0.8\"/>\n",
                x_of(node)
            ));
        }
        let label = class_names
            .get(class)
            .cloned()
            .unwrap_or_else(|| format!("class {class}"));
        let legend_y = MARGIN_TOP + 14.0 * class as f64;
        out.push_str(&format!(
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{color}\"/>\n",
            x1 - 110.0,
            legend_y
        ));
        out.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n",
            x1 - 100.0,
            legend_y + 4.0,
            xml_escape(&label)
        ));
    }

    out.push_str("</svg>\n");
    out
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
