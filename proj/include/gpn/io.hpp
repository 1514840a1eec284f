#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpn/anchors.hpp"
#include "gpn/common.hpp"
#include "gpn/eval.hpp"
#include "gpn/fit.hpp"
#include "gpn/geometry.hpp"
#include "gpn/raster.hpp"

namespace gpn {

/// One line of an ellipse record file. Ground-truth consumers ignore the
/// score; detection consumers default a missing score to 1.
struct EllipseRecord {
    std::string image_id;
    Ellipse ellipse;
    std::optional<double> score;

    EllipseRecord(std::string image_id_, Ellipse e,
                  std::optional<double> score_ = std::nullopt)
        : image_id(std::move(image_id_)), ellipse(e), score(score_) {}
};

/// One line of an encoded-proposal record file.
struct EncodedRecord {
    std::string image_id;
    EncodedEllipse encoded;
};

namespace detail {

inline double json_number(const nlohmann::json& j, const char* key,
                          const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) {
        throw invalid_input(where + ": missing field '" + key + "'");
    }
    if (!it->is_number()) {
        throw invalid_input(where + ": field '" + key + "' is not a number");
    }
    return it->get<double>();
}

inline std::string json_image_id(const nlohmann::json& j,
                                 const std::string& where) {
    const auto it = j.find("image_id");
    if (it == j.end()) return "";
    if (!it->is_string()) {
        throw invalid_input(where + ": field 'image_id' is not a string");
    }
    return it->get<std::string>();
}

inline nlohmann::json parse_line(const std::string& line,
                                 const std::string& where) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw invalid_input(where + ": malformed record: " + e.what());
    }
}

}  // namespace detail

/// Reads line-delimited ellipse records; blank lines are skipped and
/// unknown fields ignored. Errors carry source name and line number.
/// Out-of-range values keep their distinct error type (degenerate axes
/// surface as degenerate-ellipse, not as a parse failure).
inline std::vector<EllipseRecord> read_ellipse_records(
    std::istream& in, const std::string& source = "<stream>") {
    std::vector<EllipseRecord> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        const nlohmann::json j = detail::parse_line(line, where);
        const double mu_x = detail::json_number(j, "mu_x", where);
        const double mu_y = detail::json_number(j, "mu_y", where);
        const double sigma_l = detail::json_number(j, "sigma_l", where);
        const double sigma_s = detail::json_number(j, "sigma_s", where);
        const double theta = detail::json_number(j, "theta_rad", where);
        std::optional<double> score;
        if (j.contains("score")) {
            score = detail::json_number(j, "score", where);
        }
        try {
            out.emplace_back(detail::json_image_id(j, where),
                             Ellipse(mu_x, mu_y, sigma_l, sigma_s, theta),
                             score);
        } catch (const degenerate_ellipse& e) {
            throw degenerate_ellipse(where + ": " + e.what());
        } catch (const invalid_input& e) {
            throw invalid_input(where + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<EncodedRecord> read_encoded_records(
    std::istream& in, const std::string& source = "<stream>") {
    std::vector<EncodedRecord> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        const nlohmann::json j = detail::parse_line(line, where);
        EncodedRecord r;
        r.image_id = detail::json_image_id(j, where);
        r.encoded.tx = detail::json_number(j, "tx", where);
        r.encoded.ty = detail::json_number(j, "ty", where);
        r.encoded.tw = detail::json_number(j, "tw", where);
        r.encoded.th = detail::json_number(j, "th", where);
        r.encoded.t_tan = detail::json_number(j, "t_tan", where);
        out.push_back(std::move(r));
    }
    return out;
}

inline void write_ellipse_record(std::ostream& out, const EllipseRecord& r) {
    nlohmann::json j;
    if (!r.image_id.empty()) j["image_id"] = r.image_id;
    j["mu_x"] = r.ellipse.mu_x;
    j["mu_y"] = r.ellipse.mu_y;
    j["sigma_l"] = r.ellipse.sigma_l;
    j["sigma_s"] = r.ellipse.sigma_s;
    j["theta_rad"] = r.ellipse.theta;
    if (r.score.has_value()) j["score"] = *r.score;
    out << j.dump() << '\n';
}

inline void write_encoded_record(std::ostream& out, const EncodedRecord& r) {
    nlohmann::json j;
    if (!r.image_id.empty()) j["image_id"] = r.image_id;
    j["tx"] = r.encoded.tx;
    j["ty"] = r.encoded.ty;
    j["tw"] = r.encoded.tw;
    j["th"] = r.encoded.th;
    j["t_tan"] = r.encoded.t_tan;
    out << j.dump() << '\n';
}

inline std::vector<Detection> to_detections(
    const std::vector<EllipseRecord>& records) {
    std::vector<Detection> out;
    out.reserve(records.size());
    for (const EllipseRecord& r : records) {
        out.emplace_back(r.ellipse, r.score.value_or(1.0), r.image_id);
    }
    return out;
}

inline std::vector<GroundTruth> to_ground_truths(
    const std::vector<EllipseRecord>& records) {
    std::vector<GroundTruth> out;
    out.reserve(records.size());
    for (const EllipseRecord& r : records) {
        out.emplace_back(r.ellipse, r.image_id);
    }
    return out;
}

inline std::vector<EllipseRecord> from_detections(
    const std::vector<Detection>& dets) {
    std::vector<EllipseRecord> out;
    out.reserve(dets.size());
    for (const Detection& d : dets) {
        out.emplace_back(d.image_id, d.ellipse, d.score);
    }
    return out;
}

inline std::vector<EllipseRecord> from_ground_truths(
    const std::vector<GroundTruth>& gts) {
    std::vector<EllipseRecord> out;
    out.reserve(gts.size());
    for (const GroundTruth& g : gts) {
        out.emplace_back(g.image_id, g.ellipse);
    }
    return out;
}

namespace detail {

/// Fixed-format float for CSV cells: up to nine significant digits,
/// locale-independent, deterministic.
inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace detail

inline void write_froc_csv(std::ostream& out,
                           const std::vector<FrocPoint>& points) {
    out << "fp_per_image,sensitivity\n";
    for (const FrocPoint& p : points) {
        out << detail::csv_num(p.avg_fp_per_image) << ','
            << detail::csv_num(p.sensitivity) << '\n';
    }
}

inline void write_compare_csv(std::ostream& out, const CompareReport& rep) {
    out << "index,target_mu_x,target_mu_y,target_sigma_l,target_sigma_s,"
           "target_theta_rad,target_aspect,anchor_cx,anchor_cy,anchor_w,"
           "anchor_h,kl_mu_x,kl_mu_y,kl_sigma_l,kl_sigma_s,kl_theta_rad,"
           "reg_mu_x,reg_mu_y,reg_sigma_l,reg_sigma_s,reg_theta_rad,"
           "kl_iou,reg_iou,kl_loss,reg_loss,kl_iters,reg_iters,"
           "kl_converged,reg_converged,kl_diverged,reg_diverged,"
           "kl_angle_err_deg,reg_angle_err_deg\n";
    for (size_t i = 0; i < rep.rows.size(); ++i) {
        const CompareRow& r = rep.rows[i];
        const auto& t = r.target;
        out << i << ',' << detail::csv_num(t.mu_x) << ','
            << detail::csv_num(t.mu_y) << ',' << detail::csv_num(t.sigma_l)
            << ',' << detail::csv_num(t.sigma_s) << ','
            << detail::csv_num(t.theta) << ','
            << detail::csv_num(r.target_aspect) << ','
            << detail::csv_num(r.anchor.cx) << ','
            << detail::csv_num(r.anchor.cy) << ','
            << detail::csv_num(r.anchor.w) << ','
            << detail::csv_num(r.anchor.h) << ','
            << detail::csv_num(r.kl_final.mu_x) << ','
            << detail::csv_num(r.kl_final.mu_y) << ','
            << detail::csv_num(r.kl_final.sigma_l) << ','
            << detail::csv_num(r.kl_final.sigma_s) << ','
            << detail::csv_num(r.kl_final.theta) << ','
            << detail::csv_num(r.reg_final.mu_x) << ','
            << detail::csv_num(r.reg_final.mu_y) << ','
            << detail::csv_num(r.reg_final.sigma_l) << ','
            << detail::csv_num(r.reg_final.sigma_s) << ','
            << detail::csv_num(r.reg_final.theta) << ','
            << detail::csv_num(r.kl_iou) << ',' << detail::csv_num(r.reg_iou)
            << ',' << detail::csv_num(r.kl_loss) << ','
            << detail::csv_num(r.reg_loss) << ',' << r.kl_iters << ','
            << r.reg_iters << ',' << (r.kl_converged ? 1 : 0) << ','
            << (r.reg_converged ? 1 : 0) << ',' << (r.kl_diverged ? 1 : 0)
            << ',' << (r.reg_diverged ? 1 : 0) << ','
            << detail::csv_num(r.kl_angle_err_deg) << ','
            << detail::csv_num(r.reg_angle_err_deg) << '\n';
    }
}

inline void write_angle_table_csv(std::ostream& out,
                                  const std::vector<AngleErrorBin>& bins) {
    out << "aspect_lo,aspect_hi,count,kl_median_deg,reg_median_deg,"
           "kl_mean_deg,reg_mean_deg\n";
    for (const AngleErrorBin& b : bins) {
        out << detail::csv_num(b.aspect_lo) << ','
            << detail::csv_num(b.aspect_hi) << ',' << b.count << ','
            << detail::csv_num(b.kl_median_deg) << ','
            << detail::csv_num(b.reg_median_deg) << ','
            << detail::csv_num(b.kl_mean_deg) << ','
            << detail::csv_num(b.reg_mean_deg) << '\n';
    }
}

/// Plain-text greyscale map (PGM), inside cells white.
inline void write_pgm(std::ostream& out, const Mask& mask) {
    out << "P2\n" << mask.width << ' ' << mask.height << "\n255\n";
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            out << (mask.data[static_cast<size_t>(y) * mask.width + x] ? 255
                                                                       : 0);
            out << (x + 1 == mask.width ? '\n' : ' ');
        }
    }
}

}  // namespace gpn
