#include "demn/heatmap.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "demn/error.hpp"

namespace demn {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string xml_escape(const std::string& s) {
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

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

// Diverging blue-white-red for t in [-1, 1].
std::string diverging(double t) {
    t = std::clamp(t, -1.0, 1.0);
    int r = 255, g = 255, b = 255;
    if (t >= 0) {
        g = b = static_cast<int>(std::lround(255.0 * (1.0 - t)));
    } else {
        r = g = static_cast<int>(std::lround(255.0 * (1.0 + t)));
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

std::string sequential(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int g = static_cast<int>(std::lround(255.0 - 115.0 * t));
    const int b = static_cast<int>(std::lround(255.0 * (1.0 - t)));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#ff%02x%02x", g, b);
    return buf;
}

}  // namespace

HeatmapDump make_heatmap(const Model& model, const data::LabeledStory& story, const data::FeaturizedStory& features,
                         int ending) {
    if (ending != 1 && ending != 2) throw Error(ErrorKind::invalid_argument, "ending must be 1 or 2");
    ad::Tape tape(false);
    ForwardContext ctx{tape, false, nullptr};
    const StoryForward f = model.forward(ctx, features);
    const EndingTrace& tr = f.endings[ending - 1];

    HeatmapDump dump;
    dump.story_id = story.story_id;
    dump.ending = ending;
    dump.tokens = story.ending(ending);
    for (std::size_t t = 1; t < tr.match.memories.size(); ++t) {
        const Tensor& m = tr.match.memories[t].value();
        if (!m.all_finite()) throw Error(ErrorKind::non_finite, "memory turn " + std::to_string(t));
        std::vector<double> sal(m.rows());
        for (std::size_t r = 0; r < m.rows(); ++r) {
            double s = 0.0;
            for (double x : m.row(r)) s += x * x;
            sal[r] = std::sqrt(s);
        }
        dump.memories.push_back(m);
        dump.salience.push_back(std::move(sal));
    }
    return dump;
}

void write_heatmap_csv(std::ostream& out, const HeatmapDump& dump, std::size_t turn) {
    const Tensor& m = dump.memories.at(turn);
    out << "token";
    for (std::size_t j = 0; j < m.cols(); ++j) out << ",d" << j;
    out << ",salience\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << csv_escape(r < dump.tokens.size() ? dump.tokens[r] : "");
        for (double x : m.row(r)) out << ',' << fmt("%.17g", x);
        out << ',' << fmt("%.17g", dump.salience[turn][r]) << '\n';
    }
}

std::string heatmap_svg(const HeatmapDump& dump, std::size_t turn) {
    const Tensor& m = dump.memories.at(turn);
    double max_abs = 1e-12, max_sal = 1e-12;
    for (const Tensor& t : dump.memories)
        for (double x : t.values()) max_abs = std::max(max_abs, std::abs(x));
    for (const auto& s : dump.salience)
        for (double x : s) max_sal = std::max(max_sal, x);

    constexpr int cell_w = 4, cell_h = 16, label_w = 120, strip_gap = 8, strip_w = 24, top = 28;
    const int grid_w = static_cast<int>(m.cols()) * cell_w;
    const int width = label_w + grid_w + strip_gap + strip_w + 10;
    const int height = top + static_cast<int>(m.rows()) * cell_h + 10;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
           std::to_string(height) + "\" font-family=\"monospace\" font-size=\"11\">\n";
    svg += "<text x=\"4\" y=\"16\">" + xml_escape(dump.story_id) + " ending " + std::to_string(dump.ending) +
           " memory " + std::to_string(turn + 1) + " (|max| " + fmt("%.4g", max_abs) + ")</text>\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const int y = top + static_cast<int>(r) * cell_h;
        const std::string tok = r < dump.tokens.size() ? dump.tokens[r] : "";
        svg += "<text x=\"" + std::to_string(label_w - 4) + "\" y=\"" + std::to_string(y + cell_h - 4) +
               "\" text-anchor=\"end\">" + xml_escape(tok) + "</text>\n";
        for (std::size_t j = 0; j < m.cols(); ++j) {
            svg += "<rect x=\"" + std::to_string(label_w + static_cast<int>(j) * cell_w) + "\" y=\"" +
                   std::to_string(y) + "\" width=\"" + std::to_string(cell_w) + "\" height=\"" +
                   std::to_string(cell_h) + "\" fill=\"" + diverging(m(r, j) / max_abs) + "\"/>\n";
        }
        const double sal = dump.salience[turn][r];
        svg += "<rect x=\"" + std::to_string(label_w + grid_w + strip_gap) + "\" y=\"" + std::to_string(y) +
               "\" width=\"" + std::to_string(strip_w) + "\" height=\"" + std::to_string(cell_h) + "\" fill=\"" +
               sequential(sal / max_sal) + "\"><title>" + fmt("%.6g", sal) + "</title></rect>\n";
    }
    svg += "</svg>\n";
    return svg;
}

std::vector<std::filesystem::path> write_heatmaps(const std::filesystem::path& dir, const HeatmapDump& dump) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    for (std::size_t t = 0; t < dump.memories.size(); ++t) {
        std::string id = dump.story_id;
        for (char& c : id)
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
        const std::string stem = id + "_ending" + std::to_string(dump.ending) + "_turn" + std::to_string(t + 1);
        const auto csv = dir / (stem + ".csv");
        const auto svg = dir / (stem + ".svg");
        {
            std::ofstream out(csv, std::ios::binary);
            if (!out) throw Error(ErrorKind::io, "cannot write " + csv.string());
            write_heatmap_csv(out, dump, t);
        }
        {
            std::ofstream out(svg, std::ios::binary);
            if (!out) throw Error(ErrorKind::io, "cannot write " + svg.string());
            out << heatmap_svg(dump, t);
        }
        written.push_back(csv);
        written.push_back(svg);
    }
    return written;
}

}  // namespace demn
