#include "mmgest/app/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mmgest/errors.hpp"

namespace mmgest::app {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

std::vector<std::string> class_names(std::size_t classes) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < classes; ++i) out.emplace_back(scene::to_string(static_cast<scene::GestureClass>(i)));
  return out;
}

std::string format_confusion(const nn::ConfusionMatrix& cm, const std::vector<std::string>& header) {
  const auto names = class_names(cm.classes());
  std::size_t width = 10;
  for (const auto& n : names) width = std::max(width, n.size() + 2);
  std::ostringstream out;
  for (const auto& h : header) out << h << '\n';
  auto pad = [&](const std::string& s) { return s + std::string(width > s.size() ? width - s.size() : 1, ' '); };
  out << pad("true\\pred");
  for (const auto& n : names) out << pad(n);
  out << pad("n") << '\n';
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    out << pad(names[i]);
    for (std::size_t j = 0; j < cm.classes(); ++j) {
      out << pad(fmt("%.2f%%", 100.0 * cm.fraction(static_cast<int>(i), static_cast<int>(j))));
    }
    out << pad(std::to_string(cm.row_total(static_cast<int>(i)))) << '\n';
  }
  out << '\n';
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    if (cm.row_total(static_cast<int>(i)) == 0) continue;
    out << pad(names[i]) << fmt("%.2f%%", 100.0 * cm.class_accuracy(static_cast<int>(i))) << '\n';
  }
  out << pad("overall") << fmt("%.2f%%", 100.0 * cm.accuracy()) << " (" << cm.total() << " samples)\n";
  return out.str();
}

void write_confusion_csv(const nn::ConfusionMatrix& cm, const fs::path& path) {
  const auto names = class_names(cm.classes());
  std::ostringstream out;
  out << "truth,predicted,count,fraction\n";
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    for (std::size_t j = 0; j < cm.classes(); ++j) {
      out << names[i] << ',' << names[j] << ',' << cm.count(static_cast<int>(i), static_cast<int>(j)) << ','
          << fmt("%.17g", cm.fraction(static_cast<int>(i), static_cast<int>(j))) << '\n';
    }
  }
  write_text(path, out.str());
}

void write_history_csv(const nn::History& history, const fs::path& path) {
  std::ostringstream out;
  out << kHistoryHeader << '\n';
  for (const auto& e : history) {
    out << e.epoch << ',' << fmt("%.17g", e.loss) << ',' << fmt("%.17g", e.accuracy) << ',' << fmt("%.17g", e.lr)
        << '\n';
  }
  write_text(path, out.str());
}

nn::History read_history_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kHistoryHeader) {
    throw ParseError(std::string("expected header '") + kHistoryHeader + "'", line_no);
  }
  nn::History h;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_commas(line);
    if (f.size() != 4) throw ParseError("expected 4 columns, found " + std::to_string(f.size()), line_no);
    try {
      std::size_t pos = 0;
      nn::EpochStats e;
      e.epoch = std::stoul(f[0], &pos);
      if (pos != f[0].size()) throw std::invalid_argument(f[0]);
      e.loss = std::stod(f[1]);
      e.accuracy = std::stod(f[2]);
      e.lr = std::stod(f[3]);
      h.push_back(e);
    } catch (const std::logic_error&) {
      throw ParseError("non-numeric field", line_no);
    }
  }
  return h;
}

std::string history_svg(const nn::History& history) {
  const double w = 640, panel = 220, margin = 50;
  const double h = 2 * panel + 3 * margin;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const std::size_t n = history.size();
  auto panel_svg = [&](double top, const char* title, auto value, double lo, double hi, const char* colour) {
    const double left = margin, right = w - 20, bottom = top + panel;
    out << "<text x=\"" << left << "\" y=\"" << top - 8 << "\" font-family=\"sans-serif\" font-size=\"13\">" << title
        << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left << "\" height=\"" << panel
        << "\" fill=\"none\" stroke=\"#888\"/>\n";
    out << "<text x=\"" << left - 4 << "\" y=\"" << top + 10 << "\" font-family=\"sans-serif\" font-size=\"10\" "
        << "text-anchor=\"end\">" << fmt("%.3g", hi) << "</text>\n";
    out << "<text x=\"" << left - 4 << "\" y=\"" << bottom << "\" font-family=\"sans-serif\" font-size=\"10\" "
        << "text-anchor=\"end\">" << fmt("%.3g", lo) << "</text>\n";
    if (n == 0) return;
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
      const double x = n == 1 ? left : left + (right - left) * i / (n - 1);
      const double v = std::clamp(value(history[i]), lo, hi);
      const double y = bottom - (hi > lo ? (v - lo) / (hi - lo) : 0.0) * panel;
      out << fmt("%.2f", x) << ',' << fmt("%.2f", y) << (i + 1 < n ? " " : "");
    }
    out << "\"/>\n";
  };
  double max_loss = 0.0;
  for (const auto& e : history) max_loss = std::max(max_loss, std::isfinite(e.loss) ? e.loss : 0.0);
  if (max_loss <= 0.0) max_loss = 1.0;
  panel_svg(margin, "training loss", [](const nn::EpochStats& e) { return e.loss; }, 0.0, max_loss, "#c0392b");
  panel_svg(2 * margin + panel, "training accuracy", [](const nn::EpochStats& e) { return e.accuracy; }, 0.0, 1.0,
            "#2471a3");
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" font-family=\"sans-serif\" font-size=\"11\" "
      << "text-anchor=\"middle\">epoch (1.." << n << ")</text>\n";
  out << "</svg>\n";
  return out.str();
}

void write_history_svg(const nn::History& history, const fs::path& path) { write_text(path, history_svg(history)); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace mmgest::app
