#include "moodshift/circumplex.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "moodshift/errors.hpp"

namespace moodshift::circumplex {

namespace {

constexpr double kProbTolerance = 1e-6;
constexpr double kDiscTolerance = 1e-9;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string xml_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

EmotionTarget quadrant_target(emotion::Quadrant q) {
    EmotionTarget t;
    t.quadrant = q;
    return t;
}

EmotionTarget point_target(double valence, double arousal, double r) {
    if (!(r > 0.0)) throw InputError("target radius must be positive");
    if (valence * valence + arousal * arousal > r * r + kDiscTolerance)
        throw InputError("target (" + fmt(valence) + ", " + fmt(arousal) +
                         ") lies outside the disc of radius " + fmt(r));
    EmotionTarget t;
    t.point = CircumplexPoint{valence, arousal, r};
    return t;
}

EmotionTarget parse_target(const std::string& text, double r) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) {
        try {
            return quadrant_target(emotion::parse_quadrant(text));
        } catch (const InputError&) {
            throw InputError("target must be a quadrant name or 'valence,arousal', got '" +
                             text + "'");
        }
    }
    try {
        std::size_t used = 0;
        const std::string left = text.substr(0, comma);
        const std::string right = text.substr(comma + 1);
        const double v = std::stod(left, &used);
        if (used != left.size() && left.find_first_not_of(" \t", used) != std::string::npos)
            throw std::invalid_argument(left);
        const double a = std::stod(right, &used);
        if (used != right.size() && right.find_first_not_of(" \t", used) != std::string::npos)
            throw std::invalid_argument(right);
        return point_target(v, a, r);
    } catch (const InputError&) {
        throw;
    } catch (const std::exception&) {
        throw InputError("cannot parse target coordinates '" + text + "'");
    }
}

std::string describe_target(const EmotionTarget& target) {
    if (target.quadrant)
        return std::string(emotion::quadrant_name(*target.quadrant)) + " (" +
               emotion::quadrant_emotion(*target.quadrant) + ")";
    if (target.point) return "(" + fmt(target.point->x) + ", " + fmt(target.point->y) + ")";
    return "(unset)";
}

CircumplexPoint quadrant_centroid(emotion::Quadrant q, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("quadrant_centroid: radius must be positive");
    const double h = r / 2.0;
    switch (q) {
        case emotion::Quadrant::Q1: return {h, h, r};
        case emotion::Quadrant::Q2: return {-h, h, r};
        case emotion::Quadrant::Q3: return {-h, -h, r};
        default: return {h, -h, r};
    }
}

CircumplexPoint map_to_plane(const emotion::QuadrantProbs& probs, double r, bool* normalized) {
    if (normalized) *normalized = false;
    if (!(r > 0.0)) throw std::invalid_argument("map_to_plane: radius must be positive");
    for (int i = 0; i < 4; ++i)
        if (!(probs[i] >= 0.0))
            throw std::invalid_argument("map_to_plane: negative or non-finite probability");
    if (std::abs(probs.sum() - 1.0) > kProbTolerance)
        throw std::invalid_argument("map_to_plane: probabilities sum to " +
                                    std::to_string(probs.sum()));

    CircumplexPoint p;
    p.r = r;
    p.x = (probs.p1 - probs.p3) * r;
    p.y = (probs.p2 - probs.p4) * r;
    const double d = std::hypot(p.x, p.y);
    if (d > r) {  // unreachable for exact probabilities; guards tolerance slack
        p.x *= r / d;
        p.y *= r / d;
        if (normalized) *normalized = true;
    }
    return p;
}

CircumplexPoint resolve_target(const EmotionTarget& target, double r) {
    if (target.quadrant) return quadrant_centroid(*target.quadrant, r);
    if (!target.point) throw std::invalid_argument("resolve_target: target is unset");
    if (target.point->r != r)
        throw std::invalid_argument("resolve_target: radius mismatch (" + fmt(target.point->r) +
                                    " vs " + fmt(r) + ")");
    return *target.point;
}

double distance(const CircumplexPoint& point, const EmotionTarget& target) {
    const CircumplexPoint t = resolve_target(target, point.r);
    return std::hypot(point.x - t.x, point.y - t.y);
}

std::string plot_svg(const std::vector<PlotPoint>& points, const EmotionTarget* target,
                     const PlotOptions& o) {
    double r = 1.0;
    if (!points.empty())
        r = points.front().point.r;
    else if (target && target->point)
        r = target->point->r;
    for (const auto& p : points)
        if (p.point.r != r) throw std::invalid_argument("plot_svg: mixed disc radii");

    const double cx = o.width / 2.0;
    const double cy = o.height / 2.0;
    const double scale = (std::min(o.width, o.height) / 2.0 - o.margin) / r;
    const double rim = r * scale;
    auto px = [&](double x) { return cx + x * scale; };
    auto py = [&](double y) { return cy - y * scale; };  // arousal grows upward

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(o.width) +
           "\" height=\"" + std::to_string(o.height) + "\" viewBox=\"0 0 " +
           std::to_string(o.width) + " " + std::to_string(o.height) +
           "\" font-family=\"Helvetica, Arial, sans-serif\">\n";
    svg += "<rect width=\"" + std::to_string(o.width) + "\" height=\"" +
           std::to_string(o.height) + "\" fill=\"" + o.background + "\"/>\n";

    svg += "<line x1=\"" + fmt(cx - rim - 12.0) + "\" y1=\"" + fmt(cy) + "\" x2=\"" +
           fmt(cx + rim + 12.0) + "\" y2=\"" + fmt(cy) + "\" stroke=\"" + o.axis_color +
           "\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + fmt(cx) + "\" y1=\"" + fmt(cy - rim - 12.0) + "\" x2=\"" + fmt(cx) +
           "\" y2=\"" + fmt(cy + rim + 12.0) + "\" stroke=\"" + o.axis_color +
           "\" stroke-width=\"1\"/>\n";
    svg += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"" + fmt(rim) +
           "\" fill=\"none\" stroke=\"" + o.circle_color + "\" stroke-width=\"1.5\"/>\n";

    svg += "<text x=\"" + fmt(cx + rim + 10.0) + "\" y=\"" + fmt(cy - 6.0) +
           "\" text-anchor=\"end\" font-size=\"12\" fill=\"" + o.text_color +
           "\">valence</text>\n";
    svg += "<text x=\"" + fmt(cx + 6.0) + "\" y=\"" + fmt(cy - rim - 2.0) +
           "\" font-size=\"12\" fill=\"" + o.text_color + "\">arousal</text>\n";

    if (o.quadrant_labels) {
        const double off = rim * 0.62;
        const char* names[4] = {"happy", "angry", "sad", "calm"};
        const double sx[4] = {1.0, -1.0, -1.0, 1.0};
        const double sy[4] = {1.0, 1.0, -1.0, -1.0};
        for (int q = 0; q < 4; ++q)
            svg += "<text x=\"" + fmt(cx + sx[q] * off) + "\" y=\"" + fmt(cy - sy[q] * off) +
                   "\" text-anchor=\"middle\" font-size=\"13\" font-style=\"italic\" fill=\"" +
                   o.axis_color + "\">" + names[q] + "</text>\n";
    }

    if (target) {
        const CircumplexPoint t = resolve_target(*target, r);
        const double tx = px(t.x), ty = py(t.y), s = 7.0;
        svg += "<g class=\"target\" stroke=\"" + o.target_color + "\" stroke-width=\"2\">\n";
        svg += "<line x1=\"" + fmt(tx - s) + "\" y1=\"" + fmt(ty - s) + "\" x2=\"" + fmt(tx + s) +
               "\" y2=\"" + fmt(ty + s) + "\"/>\n";
        svg += "<line x1=\"" + fmt(tx - s) + "\" y1=\"" + fmt(ty + s) + "\" x2=\"" + fmt(tx + s) +
               "\" y2=\"" + fmt(ty - s) + "\"/>\n";
        svg += "</g>\n";
        svg += "<text x=\"" + fmt(tx + s + 4.0) + "\" y=\"" + fmt(ty + 4.0) +
               "\" font-size=\"12\" fill=\"" + o.target_color + "\">target " +
               xml_escape(describe_target(*target)) + "</text>\n";
    }

    for (const auto& p : points) {
        const double mx = px(p.point.x), my = py(p.point.y), s = p.style.size;
        switch (p.style.marker) {
            case MarkerShape::Circle:
                svg += "<circle class=\"point\" cx=\"" + fmt(mx) + "\" cy=\"" + fmt(my) +
                       "\" r=\"" + fmt(s) + "\" fill=\"" + p.style.color + "\"/>\n";
                break;
            case MarkerShape::Square:
                svg += "<rect class=\"point\" x=\"" + fmt(mx - s) + "\" y=\"" + fmt(my - s) +
                       "\" width=\"" + fmt(2 * s) + "\" height=\"" + fmt(2 * s) + "\" fill=\"" +
                       p.style.color + "\"/>\n";
                break;
            case MarkerShape::Diamond:
                svg += "<path class=\"point\" d=\"M " + fmt(mx) + " " + fmt(my - s) + " L " +
                       fmt(mx + s) + " " + fmt(my) + " L " + fmt(mx) + " " + fmt(my + s) + " L " +
                       fmt(mx - s) + " " + fmt(my) + " Z\" fill=\"" + p.style.color + "\"/>\n";
                break;
        }
        if (!p.label.empty())
            svg += "<text x=\"" + fmt(mx + s + 4.0) + "\" y=\"" + fmt(my + 4.0) +
                   "\" font-size=\"12\" fill=\"" + p.style.color + "\">" + xml_escape(p.label) +
                   "</text>\n";
    }

    svg += "</svg>\n";
    return svg;
}

}  // namespace moodshift::circumplex
