#pragma once

// Russell-plane geometry: quadrant probabilities map to a point on a disc
// whose horizontal axis is valence and vertical axis is arousal, targets are
// quadrant centroids or explicit points, and plots are static SVG documents.

#include <optional>
#include <string>
#include <vector>

#include "moodshift/classifier.hpp"

namespace moodshift::circumplex {

struct CircumplexPoint {
    double x = 0.0;  // valence
    double y = 0.0;  // arousal
    double r = 1.0;  // disc radius; x^2 + y^2 <= r^2 + 1e-9

    friend bool operator==(const CircumplexPoint&, const CircumplexPoint&) = default;
};

/// Either a quadrant (aimed at its centroid) or an explicit point. Exactly
/// one of the fields is set.
struct EmotionTarget {
    std::optional<emotion::Quadrant> quadrant;
    std::optional<CircumplexPoint> point;
};

EmotionTarget quadrant_target(emotion::Quadrant q);

/// Throws InputError when (valence, arousal) lies outside the disc.
EmotionTarget point_target(double valence, double arousal, double r = 1.0);

/// Accepts quadrant names ("q3", "sad", "3") or "valence,arousal" pairs.
EmotionTarget parse_target(const std::string& text, double r = 1.0);

/// "Q3 (sad)" or "(0.30, -0.40)"; used in plot annotations.
std::string describe_target(const EmotionTarget& target);

/// Quadrant centroid at (+-r/2, +-r/2): Q1 (+,+), Q2 (-,+), Q3 (-,-), Q4 (+,-).
CircumplexPoint quadrant_centroid(emotion::Quadrant q, double r);

/// x = (p1-p3)*r, y = (p2-p4)*r. For a valid probability vector
/// |x| + |y| <= r, so the rescale-to-the-rim branch cannot activate; it is
/// kept as a guard for inputs at the validation tolerance and reported
/// through `normalized` so callers can assert it stayed cold.
/// Throws std::invalid_argument on negative entries, a sum off 1 by more
/// than 1e-6, or r <= 0.
CircumplexPoint map_to_plane(const emotion::QuadrantProbs& probs, double r,
                             bool* normalized = nullptr);

/// Euclidean distance to the target point or quadrant centroid.
/// Throws std::invalid_argument when the radii disagree.
double distance(const CircumplexPoint& point, const EmotionTarget& target);

/// The concrete point a target denotes on a disc of radius r.
CircumplexPoint resolve_target(const EmotionTarget& target, double r);

enum class MarkerShape { Circle, Square, Diamond };

struct PlotStyle {
    std::string color = "#1f6feb";
    MarkerShape marker = MarkerShape::Circle;
    double size = 6.0;  // marker half-extent in pixels
};

struct PlotPoint {
    std::string label;
    CircumplexPoint point;
    PlotStyle style;
};

struct PlotOptions {
    int width = 480;
    int height = 480;
    double margin = 40.0;
    std::string background = "#ffffff";
    std::string axis_color = "#9aa0a6";
    std::string circle_color = "#3c4043";
    std::string text_color = "#202124";
    std::string target_color = "#d93025";
    bool quadrant_labels = true;  // happy / angry / sad / calm annotations
};

/// Deterministic standalone SVG: disc boundary, axes, optional quadrant
/// annotations, one marker and label per point, optional target cross.
/// Throws std::invalid_argument when the supplied radii disagree.
std::string plot_svg(const std::vector<PlotPoint>& points,
                     const EmotionTarget* target = nullptr, const PlotOptions& options = {});

}  // namespace moodshift::circumplex
