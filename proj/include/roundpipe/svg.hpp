#pragma once

// Deterministic SVG Gantt rendering of a simulated timeline: one lane
// per GPU, rectangles colored by stage slot, optional legend mapping
// slots to layer ranges.

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "roundpipe/simulator.hpp"

namespace roundpipe {
namespace svg {

// Fixed palette, indexed by slot modulo its size.
inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> colors = {
      "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
      "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#1f77b4", "#aec7e8",
  };
  return colors;
}

inline std::string render_gantt(const SimReport& rep, int num_gpus,
                                const std::vector<StageSlot>& slot_table = {},
                                int width = 1200) {
  const double lane_h = 28, lane_gap = 6, left = 70, top = 30;
  std::int64_t t0 = rep.timeline.empty() ? 0 : rep.timeline[0].start_ns;
  std::int64_t t1 = 1;
  for (const auto& e : rep.timeline) {
    t0 = std::min(t0, e.start_ns);
    t1 = std::max(t1, e.end_ns);
  }
  const double scale = (width - left - 20) / static_cast<double>(t1 - t0);
  const double legend_h = slot_table.empty() ? 0 : 20.0 * slot_table.size();
  const double height =
      top + num_gpus * (lane_h + lane_gap) + 30 + legend_h;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << static_cast<int>(height) << "\">\n";
  out << "<style>text{font-family:monospace;font-size:12px}</style>\n";
  for (int g = 0; g < num_gpus; ++g) {
    const double y = top + g * (lane_h + lane_gap);
    out << "<text x=\"4\" y=\"" << y + lane_h / 2 + 4 << "\">gpu" << g
        << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << y << "\" width=\""
        << width - left - 20 << "\" height=\"" << lane_h
        << "\" fill=\"#f2f2f2\"/>\n";
  }
  for (const auto& e : rep.timeline) {
    const double x = left + (e.start_ns - t0) * scale;
    const double w = (e.end_ns - e.start_ns) * scale;
    const double y = top + e.task.gpu * (lane_h + lane_gap);
    const auto& color = palette()[e.task.slot % palette().size()];
    out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w
        << "\" height=\"" << lane_h << "\" fill=\"" << color
        << "\" stroke=\"#ffffff\" stroke-width=\"0.5\"><title>iter "
        << e.task.iteration << " slot " << e.task.slot << " mb " << e.task.mb
        << " [" << e.start_ns << "," << e.end_ns << ")</title></rect>\n";
  }
  if (!slot_table.empty()) {
    const double ly = top + num_gpus * (lane_h + lane_gap) + 20;
    for (std::size_t i = 0; i < slot_table.size(); ++i) {
      const auto& s = slot_table[i];
      const double y = ly + 20.0 * i;
      out << "<rect x=\"" << left << "\" y=\"" << y - 10
          << "\" width=\"14\" height=\"14\" fill=\""
          << palette()[s.index % palette().size()] << "\"/>\n";
      const char* kind = s.kind == StageKind::Forward
                             ? "fwd"
                             : (s.kind == StageKind::Fused ? "fused" : "bwd");
      out << "<text x=\"" << left + 20 << "\" y=\"" << y + 2 << "\">slot "
          << s.index << " " << kind << " layers " << s.layers.first << ".."
          << s.layers.last << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace svg
}  // namespace roundpipe
