#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace frgp {

// shortest exact decimal: %.17g round-trips every double
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_sci(double v, int digits = 6) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add_row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_.size())
            throw std::domain_error("CsvWriter: cell count does not match header");
        rows_.push_back(cells);
    }

    std::string str() const {
        std::ostringstream out;
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            if (i) out << ',';
            out << columns_[i];
        }
        out << '\n';
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out << ',';
                out << row[i];
            }
            out << '\n';
        }
        return out.str();
    }

  private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_file: cannot open " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write_file: short write to " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_file: cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// CRC-32 (IEEE 802.3 polynomial, reflected form)
inline std::uint32_t crc32(const std::string& bytes) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = 0xffffffffu;
    for (unsigned char byte : bytes) c = table[(c ^ byte) & 0xffu] ^ (c >> 8);
    return c ^ 0xffffffffu;
}

// ---------------------------------------------------------------------------
// minimal self-contained SVG plots: every element is self-closing or a
// balanced text node, so the output is well-formed XML by construction

namespace svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    return colors[i % 6];
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Frame {
    double width = 640.0;
    double height = 480.0;
    double margin = 56.0;
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;

    double px(double x) const {
        return margin + (x - x_min) / (x_max - x_min) * (width - 2.0 * margin);
    }
    double py(double y) const {
        return height - margin - (y - y_min) / (y_max - y_min) * (height - 2.0 * margin);
    }
};

inline void expand_range(double& lo, double& hi) {
    if (hi <= lo) {
        lo -= 0.5;
        hi += 0.5;
    } else {
        const double pad = (hi - lo) * 0.05;
        lo -= pad;
        hi += pad;
    }
}

inline void header(std::ostringstream& out, const Frame& f, const std::string& title,
                   const std::string& x_label, const std::string& y_label) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
        << f.height << "\" viewBox=\"0 0 " << f.width << " " << f.height << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << f.width << "\" height=\"" << f.height
        << "\" fill=\"#ffffff\"/>\n";
    // axes
    out << "<line x1=\"" << f.margin << "\" y1=\"" << f.height - f.margin << "\" x2=\""
        << f.width - f.margin << "\" y2=\"" << f.height - f.margin
        << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    out << "<line x1=\"" << f.margin << "\" y1=\"" << f.margin << "\" x2=\"" << f.margin
        << "\" y2=\"" << f.height - f.margin << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    // ticks and labels
    for (int t = 0; t <= 4; ++t) {
        const double xv = f.x_min + (f.x_max - f.x_min) * t / 4.0;
        const double yv = f.y_min + (f.y_max - f.y_min) * t / 4.0;
        out << "<line x1=\"" << f.px(xv) << "\" y1=\"" << f.height - f.margin << "\" x2=\""
            << f.px(xv) << "\" y2=\"" << f.height - f.margin + 5 << "\" stroke=\"#000000\"/>\n";
        out << "<text x=\"" << f.px(xv) << "\" y=\"" << f.height - f.margin + 18
            << "\" font-size=\"11\" text-anchor=\"middle\">" << escape(format_sci(xv, 4))
            << "</text>\n";
        out << "<line x1=\"" << f.margin - 5 << "\" y1=\"" << f.py(yv) << "\" x2=\"" << f.margin
            << "\" y2=\"" << f.py(yv) << "\" stroke=\"#000000\"/>\n";
        out << "<text x=\"" << f.margin - 8 << "\" y=\"" << f.py(yv) + 4
            << "\" font-size=\"11\" text-anchor=\"end\">" << escape(format_sci(yv, 4))
            << "</text>\n";
    }
    out << "<text x=\"" << f.width / 2.0 << "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">"
        << escape(title) << "</text>\n";
    out << "<text x=\"" << f.width / 2.0 << "\" y=\"" << f.height - 12
        << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
    out << "<text x=\"14\" y=\"" << f.height / 2.0
        << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << f.height / 2.0
        << ")\">" << escape(y_label) << "</text>\n";
}

inline std::string line_plot(const std::string& title, const std::string& x_label,
                             const std::string& y_label, const std::vector<Series>& series) {
    Frame f;
    bool any = false;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!any) {
                f.x_min = f.x_max = s.x[i];
                f.y_min = f.y_max = s.y[i];
                any = true;
            }
            f.x_min = std::min(f.x_min, s.x[i]);
            f.x_max = std::max(f.x_max, s.x[i]);
            f.y_min = std::min(f.y_min, s.y[i]);
            f.y_max = std::max(f.y_max, s.y[i]);
        }
    expand_range(f.x_min, f.x_max);
    expand_range(f.y_min, f.y_max);
    std::ostringstream out;
    header(out, f, title, x_label, y_label);
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        out << "<polyline fill=\"none\" stroke=\"" << palette(si) << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (i) out << ' ';
            out << f.px(s.x[i]) << ',' << f.py(s.y[i]);
        }
        out << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << "<circle cx=\"" << f.px(s.x[i]) << "\" cy=\"" << f.py(s.y[i])
                << "\" r=\"2.5\" fill=\"" << palette(si) << "\"/>\n";
        out << "<text x=\"" << f.width - f.margin + 4 << "\" y=\"" << f.margin + 16.0 * si
            << "\" font-size=\"11\" fill=\"" << palette(si) << "\">" << escape(s.label)
            << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

struct Box {
    std::string label;
    double lo = 0.0, q1 = 0.0, med = 0.0, q3 = 0.0, hi = 0.0;
};

inline std::string box_plot(const std::string& title, const std::string& y_label,
                            const std::vector<Box>& boxes) {
    Frame f;
    f.x_min = -0.5;
    f.x_max = static_cast<double>(boxes.size()) - 0.5;
    bool any = false;
    for (const auto& b : boxes) {
        if (!any) {
            f.y_min = b.lo;
            f.y_max = b.hi;
            any = true;
        }
        f.y_min = std::min(f.y_min, b.lo);
        f.y_max = std::max(f.y_max, b.hi);
    }
    expand_range(f.y_min, f.y_max);
    std::ostringstream out;
    header(out, f, title, "", y_label);
    const double w = 0.3;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto& b = boxes[i];
        const double cx = static_cast<double>(i);
        out << "<line x1=\"" << f.px(cx) << "\" y1=\"" << f.py(b.lo) << "\" x2=\"" << f.px(cx)
            << "\" y2=\"" << f.py(b.q1) << "\" stroke=\"#000000\"/>\n";
        out << "<line x1=\"" << f.px(cx) << "\" y1=\"" << f.py(b.q3) << "\" x2=\"" << f.px(cx)
            << "\" y2=\"" << f.py(b.hi) << "\" stroke=\"#000000\"/>\n";
        out << "<rect x=\"" << f.px(cx - w) << "\" y=\"" << f.py(b.q3) << "\" width=\""
            << f.px(cx + w) - f.px(cx - w) << "\" height=\"" << f.py(b.q1) - f.py(b.q3)
            << "\" fill=\"#9ecae1\" stroke=\"#000000\"/>\n";
        out << "<line x1=\"" << f.px(cx - w) << "\" y1=\"" << f.py(b.med) << "\" x2=\""
            << f.px(cx + w) << "\" y2=\"" << f.py(b.med)
            << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << f.px(cx) << "\" y=\"" << f.height - f.margin + 32
            << "\" font-size=\"11\" text-anchor=\"middle\">" << escape(b.label) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace svg

} // namespace frgp
