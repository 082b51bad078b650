#pragma once

#include "smto/io.hpp"

#include <iomanip>
#include <sstream>

namespace smto {

namespace detail {

/// Maps workspace coordinates into a y-down SVG pixel frame.
struct SvgFrame {
    double x0, y0, x1, y1, scale, width, height;

    explicit SvgFrame(const Rect& workspace, double pixels = 640.0) {
        double margin = 0.06 * std::max(workspace.max.x() - workspace.min.x(),
                                        workspace.max.y() - workspace.min.y());
        x0 = workspace.min.x() - margin;
        y0 = workspace.min.y() - margin;
        x1 = workspace.max.x() + margin;
        y1 = workspace.max.y() + margin;
        scale = pixels / std::max(x1 - x0, y1 - y0);
        width = (x1 - x0) * scale;
        height = (y1 - y0) * scale;
    }

    double px(double x) const { return (x - x0) * scale; }
    double py(double y) const { return (y1 - y) * scale; }
};

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(8) << v;
    return os.str();
}

inline const char* palette(int i) {
    static const char* colors[] = {"#d1495b", "#00798c", "#edae49", "#3d5a80",
                                   "#8d5a97", "#6a994e", "#bc4749", "#386641",
                                   "#7b2cbf", "#118ab2"};
    return colors[i % 10];
}

inline void append_scene(std::ostringstream& os, const Scene& scene, const SvgFrame& f) {
    for (const auto& poly : scene.unit_cost_regions) {
        os << "<polygon points=\"";
        for (const auto& v : poly) os << fmt(f.px(v.x())) << "," << fmt(f.py(v.y())) << " ";
        os << "\" fill=\"#a8c6e8\" stroke=\"#6d94bd\" stroke-width=\"1\"/>\n";
    }
    for (const auto& ob : scene.obstacles) {
        if (const auto* c = std::get_if<Circle>(&ob.shape)) {
            os << "<circle cx=\"" << fmt(f.px(c->center.x())) << "\" cy=\""
               << fmt(f.py(c->center.y())) << "\" r=\"" << fmt(c->radius * f.scale)
               << "\" fill=\"#7fb069\" stroke=\"#4f7942\" stroke-width=\"1\"/>\n";
        } else if (const auto* r = std::get_if<Rect>(&ob.shape)) {
            os << "<rect x=\"" << fmt(f.px(r->min.x())) << "\" y=\"" << fmt(f.py(r->max.y()))
               << "\" width=\"" << fmt((r->max.x() - r->min.x()) * f.scale) << "\" height=\""
               << fmt((r->max.y() - r->min.y()) * f.scale)
               << "\" fill=\"#7fb069\" stroke=\"#4f7942\" stroke-width=\"1\"/>\n";
        } else if (const auto* cap = std::get_if<Capsule>(&ob.shape)) {
            os << "<line x1=\"" << fmt(f.px(cap->a.x())) << "\" y1=\"" << fmt(f.py(cap->a.y()))
               << "\" x2=\"" << fmt(f.px(cap->b.x())) << "\" y2=\"" << fmt(f.py(cap->b.y()))
               << "\" stroke=\"#7fb069\" stroke-width=\"" << fmt(2.0 * cap->radius * f.scale)
               << "\" stroke-linecap=\"round\"/>\n";
        }
    }
}

inline std::string trace_path(const Problem& problem, const Trajectory& traj, const SvgFrame& f) {
    std::ostringstream d;
    for (int t = 0; t <= traj.steps(); ++t) {
        Vec2 x;
        if (problem.arm) {
            x = forward_kinematics(*problem.arm, traj.waypoints.row(t).transpose()).position;
        } else {
            x = traj.waypoints.row(t).transpose();
        }
        d << (t == 0 ? "M" : "L") << fmt(f.px(x.x())) << " " << fmt(f.py(x.y())) << " ";
    }
    return d.str();
}

inline void append_arm_poses(std::ostringstream& os, const Problem& problem,
                             const Trajectory& traj, const SvgFrame& f, const char* color) {
    if (!problem.arm) return;
    int poses = 10;
    for (int k = 0; k < poses; ++k) {
        int t = static_cast<int>(std::lround(static_cast<double>(k) * traj.steps() / (poses - 1)));
        auto origins = joint_origins(*problem.arm, traj.waypoints.row(t).transpose());
        double opacity = 0.25 + 0.75 * static_cast<double>(k) / (poses - 1);
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2.5\" "
           << "stroke-opacity=\"" << fmt(opacity) << "\" points=\"";
        for (const auto& p : origins) os << fmt(f.px(p.x())) << "," << fmt(f.py(p.y())) << " ";
        os << "\"/>\n";
    }
}

}  // namespace detail

/// One SVG per solution: scene geometry, ten arm poses along the trajectory
/// and the end-effector trace.
inline std::string solution_svg(const Problem& problem, const Solution& sol, int index) {
    detail::SvgFrame f(problem.scene.workspace);
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fmt(f.width)
       << "\" height=\"" << detail::fmt(f.height) << "\" viewBox=\"0 0 " << detail::fmt(f.width)
       << " " << detail::fmt(f.height) << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"#fbf8f1\"/>\n";
    detail::append_scene(os, problem.scene, f);
    const char* color = detail::palette(index);
    detail::append_arm_poses(os, problem, sol.trajectory, f, color);
    os << "<path d=\"" << detail::trace_path(problem, sol.trajectory, f)
       << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "</svg>\n";
    return os.str();
}

/// Overview SVG with one trace path per solution.
inline std::string overview_svg(const Problem& problem, const SolutionSet& result) {
    detail::SvgFrame f(problem.scene.workspace);
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fmt(f.width)
       << "\" height=\"" << detail::fmt(f.height) << "\" viewBox=\"0 0 " << detail::fmt(f.width)
       << " " << detail::fmt(f.height) << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"#fbf8f1\"/>\n";
    detail::append_scene(os, problem.scene, f);
    for (std::size_t i = 0; i < result.solutions.size(); ++i) {
        os << "<path d=\"" << detail::trace_path(problem, result.solutions[i].trajectory, f)
           << "\" fill=\"none\" stroke=\"" << detail::palette(static_cast<int>(i))
           << "\" stroke-width=\"2\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

inline void write_plots(const Problem& problem, const SolutionSet& result,
                        const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    for (std::size_t i = 0; i < result.solutions.size(); ++i) {
        write_text_atomic((fs::path(directory) / ("solution_" + std::to_string(i) + ".svg")).string(),
                          solution_svg(problem, result.solutions[i], static_cast<int>(i)));
    }
    write_text_atomic((fs::path(directory) / "overview.svg").string(),
                      overview_svg(problem, result));
}

}  // namespace smto
