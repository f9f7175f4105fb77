#ifndef CIL_SERIALIZE_HPP
#define CIL_SERIALIZE_HPP

#include <Eigen/Core>
#include <charconv>
#include <string>
#include <system_error>

#include <json.hpp>

#include "cil/errors.hpp"

namespace cil {

using Json = nlohmann::json;

// Shortest decimal form that parses back to the identical double. Used for the
// CSV outputs so that reruns with the same seed are byte-identical.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InvalidArgument("not a number: '" + std::string(s) + "'");
    return v;
}

// Row-major nested arrays.
inline Json matrix_to_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& what) {
    if (!j.is_array()) throw Error(what + ": expected an array of rows");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    Eigen::Index cols = -1;
    for (const auto& row : j) {
        if (!row.is_array()) throw Error(what + ": expected an array of rows");
        if (cols < 0)
            cols = static_cast<Eigen::Index>(row.size());
        else if (cols != static_cast<Eigen::Index>(row.size()))
            throw Error(what + ": ragged rows");
    }
    Eigen::MatrixXd m(rows, cols < 0 ? 0 : cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = j[r][c].get<double>();
    return m;
}

inline Json vector_to_json(const Eigen::VectorXd& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

inline Eigen::VectorXd vector_from_json(const Json& j, const std::string& what) {
    if (!j.is_array()) throw Error(what + ": expected an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

}  // namespace cil

#endif  // CIL_SERIALIZE_HPP
