#include "tact/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "tact/error.hpp"

namespace tact {

RunSeries load_run(const std::filesystem::path& run_dir) {
  RunSeries s;
  s.name = run_dir.filename().string();
  if (s.name.empty()) s.name = run_dir.parent_path().filename().string();
  s.rows = load_metric_log(run_dir / "metrics.jsonl");
  if (s.rows.empty()) throw schema_error("metric log is empty: " + (run_dir / "metrics.jsonl").string());
  return s;
}

namespace {

struct Series {
  std::string label;
  std::string color;
  bool dashed = false;
  std::vector<std::pair<double, double>> points;  // (epoch, value)
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

// Minimal self-contained SVG line chart.
void write_svg(const std::filesystem::path& path, const std::string& title,
               const std::vector<Series>& series) {
  const int W = 640, H = 420, ml = 64, mr = 24, mt = 40, mb = 44;
  double xmin = std::numeric_limits<double>::max(), xmax = std::numeric_limits<double>::lowest();
  double ymin = xmin, ymax = xmax;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (series.empty() || xmin > xmax) throw schema_error("nothing to plot");
  if (xmax == xmin) xmax = xmin + 1;  // single-point series still renders
  if (ymax == ymin) ymax = ymin + 1;
  const double yspan = ymax - ymin;
  ymin -= 0.05 * yspan;
  ymax += 0.05 * yspan;

  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto sy = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  svg << "<rect width='100%' height='100%' fill='white'/>\n";
  svg << "<text x='" << W / 2 << "' y='22' text-anchor='middle' font-size='15' "
         "font-family='sans-serif'>" << title << "</text>\n";
  // axes
  svg << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
      << "' stroke='black'/>\n";
  svg << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
      << "' stroke='black'/>\n";
  char buf[64];
  for (int i = 0; i <= 4; ++i) {
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    std::snprintf(buf, sizeof(buf), "%.3g", yv);
    svg << "<text x='" << ml - 6 << "' y='" << sy(yv) + 4
        << "' text-anchor='end' font-size='11' font-family='sans-serif'>" << buf << "</text>\n";
    svg << "<line x1='" << ml << "' y1='" << sy(yv) << "' x2='" << W - mr << "' y2='" << sy(yv)
        << "' stroke='#dddddd'/>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    std::snprintf(buf, sizeof(buf), "%.3g", xv);
    svg << "<text x='" << sx(xv) << "' y='" << H - mb + 18
        << "' text-anchor='middle' font-size='11' font-family='sans-serif'>" << buf
        << "</text>\n";
  }
  svg << "<text x='" << (W + ml - mr) / 2 << "' y='" << H - 8
      << "' text-anchor='middle' font-size='12' font-family='sans-serif'>epoch</text>\n";

  int li = 0;
  for (const auto& s : series) {
    svg << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.6'";
    if (s.dashed) svg << " stroke-dasharray='6,4'";
    svg << " points='";
    for (auto [x, y] : s.points) svg << sx(x) << "," << sy(y) << " ";
    svg << "'/>\n";
    if (s.points.size() == 1) {
      svg << "<circle cx='" << sx(s.points[0].first) << "' cy='" << sy(s.points[0].second)
          << "' r='3' fill='" << s.color << "'/>\n";
    }
    svg << "<text x='" << W - mr - 8 << "' y='" << mt + 16 * li
        << "' text-anchor='end' font-size='11' font-family='sans-serif' fill='" << s.color
        << "'>" << s.label << (s.dashed ? " (train)" : "") << "</text>\n";
    ++li;
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw io_error("cannot write plot: " + path.string());
  out << svg.str();
}

std::vector<std::pair<double, double>> pick(const std::vector<MetricRow>& rows,
                                            const std::string& split,
                                            double MetricRow::*field) {
  std::vector<std::pair<double, double>> out;
  for (const auto& r : rows)
    if (r.split == split) out.emplace_back(static_cast<double>(r.epoch), r.*field);
  return out;
}

}  // namespace

std::vector<std::filesystem::path> write_report(const std::vector<RunSeries>& runs,
                                                const std::filesystem::path& out_dir) {
  if (runs.empty()) throw usage_error("report needs at least one run");
  for (const auto& r : runs)
    if (r.rows.empty()) throw schema_error("run " + r.name + " has an empty metric log");
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;

  // --- summary.txt: one table, metric keys appear exactly once in the header.
  {
    const auto path = out_dir / "summary.txt";
    std::ofstream out(path);
    out << "run\tsplit\tepoch\tloss_total\tloss_tv\tloss_tl\tloss_vl\tretrieval_top1\n";
    for (const auto& run : runs) {
      for (const std::string split : {"train", "val"}) {
        const MetricRow* last = nullptr;
        for (const auto& r : run.rows)
          if (r.split == split) last = &r;
        if (!last) continue;
        out << run.name << "\t" << split << "\t" << last->epoch << "\t" << last->loss_total
            << "\t" << last->loss_tv << "\t" << last->loss_tl << "\t" << last->loss_vl << "\t"
            << last->retrieval_top1 << "\n";
      }
    }
    written.push_back(path);
  }

  // --- loss curves per run
  {
    std::vector<Series> series;
    int ci = 0;
    for (const auto& run : runs) {
      auto train = pick(run.rows, "train", &MetricRow::loss_total);
      auto val = pick(run.rows, "val", &MetricRow::loss_total);
      const std::string color = kPalette[ci % 6];
      if (!train.empty()) series.push_back({run.name + " train", color, true, train});
      if (!val.empty()) series.push_back({run.name + " val", color, false, val});
      ++ci;
    }
    const auto path = out_dir / "loss_curves.svg";
    write_svg(path, "total loss vs epoch", series);
    written.push_back(path);
  }

  // --- retrieval accuracy per run
  {
    std::vector<Series> series;
    int ci = 0;
    for (const auto& run : runs) {
      auto val = pick(run.rows, "val", &MetricRow::retrieval_top1);
      if (val.empty()) val = pick(run.rows, "train", &MetricRow::retrieval_top1);
      if (!val.empty()) series.push_back({run.name, kPalette[ci % 6], false, val});
      ++ci;
    }
    if (!series.empty()) {
      const auto path = out_dir / "retrieval.svg";
      write_svg(path, "tactile-to-text top-1 retrieval vs epoch", series);
      written.push_back(path);
    }
  }

  // --- multi-run overlay: generalization gap (val - train), the view the γ
  // ablation is judged by.
  if (runs.size() >= 2) {
    std::vector<Series> series;
    int ci = 0;
    for (const auto& run : runs) {
      auto train = pick(run.rows, "train", &MetricRow::loss_total);
      auto val = pick(run.rows, "val", &MetricRow::loss_total);
      std::vector<std::pair<double, double>> gap;
      for (std::size_t i = 0; i < std::min(train.size(), val.size()); ++i)
        if (train[i].first == val[i].first)
          gap.emplace_back(train[i].first, val[i].second - train[i].second);
      if (!gap.empty()) series.push_back({run.name, kPalette[ci % 6], false, gap});
      ++ci;
    }
    if (series.size() >= 2) {
      const auto path = out_dir / "gamma_overlay.svg";
      write_svg(path, "generalization gap (val - train loss) vs epoch", series);
      written.push_back(path);
    }
  }

  return written;
}

}  // namespace tact
