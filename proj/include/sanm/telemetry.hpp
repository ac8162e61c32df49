#pragma once

// Telemetry persistence: a fixed-schema CSV holding one row per control tick.
// Values are written with 17 significant digits so a write/read round trip is
// lossless for doubles; replaying a config byte-compares equal.

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sanm/errors.hpp"
#include "sanm/geom3.hpp"

namespace sanm::harness {

using geom3::Mat3;
using geom3::Vec3;

struct LogRow {
    double t = 0.0;
    Vec3 x = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    Mat3 r = Mat3::Identity();
    Vec3 omega = Vec3::Zero();
    Vec3 x_d = Vec3::Zero();
    Vec3 xddot_d = Vec3::Zero();
    Vec3 e_x = Vec3::Zero();
    Vec3 e_v = Vec3::Zero();
    Vec3 e_r = Vec3::Zero();
    Vec3 e_omega = Vec3::Zero();
    double psi = 0.0;
    Vec3 force_d = Vec3::Zero();
    Vec3 moment_d = Vec3::Zero();
    double f_d = 0.0;
    double f = 0.0;
    Vec3 moment = Vec3::Zero();
    double delta_f = 0.0;
    Vec3 delta_m = Vec3::Zero();
    Vec3 m_hat = Vec3::Zero();
    Vec3 j_hat = Vec3::Zero();
    Vec3 w_x_norm = Vec3::Zero();
    Vec3 w_r_norm = Vec3::Zero();
    Vec3 phi_x_hat = Vec3::Zero();
    Vec3 phi_r_hat = Vec3::Zero();
    Vec3 phi_x = Vec3::Zero();
    Vec3 phi_r = Vec3::Zero();
    double v_lyap = 0.0;   // complete candidate V
    double v_rot = 0.0;    // rotational share V_R
    double v_trans = 0.0;  // translational share V_X
    double v_est = 0.0;    // estimation-error candidate V_E
    double z_norm = 0.0;
    double clamped = 0.0;  // 0/1
};

inline constexpr int kLogColumns = 83;

inline const char* log_header() {
    return "t,"
           "x0,x1,x2,v0,v1,v2,"
           "r00,r01,r02,r10,r11,r12,r20,r21,r22,"
           "omega0,omega1,omega2,"
           "xd0,xd1,xd2,xdd0,xdd1,xdd2,"
           "ex0,ex1,ex2,ev0,ev1,ev2,er0,er1,er2,ew0,ew1,ew2,psi,"
           "fd0,fd1,fd2,md0,md1,md2,fd_total,f,m0,m1,m2,delta_f,dm0,dm1,dm2,"
           "mhat0,mhat1,mhat2,jhat0,jhat1,jhat2,"
           "wxnorm0,wxnorm1,wxnorm2,wrnorm0,wrnorm1,wrnorm2,"
           "phixhat0,phixhat1,phixhat2,phirhat0,phirhat1,phirhat2,"
           "phix0,phix1,phix2,phir0,phir1,phir2,"
           "v,v_r,v_x,v_e,z_norm,clamped";
}

inline void row_to_values(const LogRow& row, std::array<double, kLogColumns>& out) {
    int i = 0;
    auto put = [&](double v) { out[i++] = v; };
    auto put3 = [&](const Vec3& v) {
        put(v(0));
        put(v(1));
        put(v(2));
    };
    put(row.t);
    put3(row.x);
    put3(row.v);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) put(row.r(a, b));
    put3(row.omega);
    put3(row.x_d);
    put3(row.xddot_d);
    put3(row.e_x);
    put3(row.e_v);
    put3(row.e_r);
    put3(row.e_omega);
    put(row.psi);
    put3(row.force_d);
    put3(row.moment_d);
    put(row.f_d);
    put(row.f);
    put3(row.moment);
    put(row.delta_f);
    put3(row.delta_m);
    put3(row.m_hat);
    put3(row.j_hat);
    put3(row.w_x_norm);
    put3(row.w_r_norm);
    put3(row.phi_x_hat);
    put3(row.phi_r_hat);
    put3(row.phi_x);
    put3(row.phi_r);
    put(row.v_lyap);
    put(row.v_rot);
    put(row.v_trans);
    put(row.v_est);
    put(row.z_norm);
    put(row.clamped);
}

inline LogRow row_from_values(const std::array<double, kLogColumns>& in) {
    LogRow row;
    int i = 0;
    auto get = [&]() { return in[i++]; };
    auto get3 = [&]() {
        Vec3 v;
        v(0) = get();
        v(1) = get();
        v(2) = get();
        return v;
    };
    row.t = get();
    row.x = get3();
    row.v = get3();
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) row.r(a, b) = get();
    row.omega = get3();
    row.x_d = get3();
    row.xddot_d = get3();
    row.e_x = get3();
    row.e_v = get3();
    row.e_r = get3();
    row.e_omega = get3();
    row.psi = get();
    row.force_d = get3();
    row.moment_d = get3();
    row.f_d = get();
    row.f = get();
    row.moment = get3();
    row.delta_f = get();
    row.delta_m = get3();
    row.m_hat = get3();
    row.j_hat = get3();
    row.w_x_norm = get3();
    row.w_r_norm = get3();
    row.phi_x_hat = get3();
    row.phi_r_hat = get3();
    row.phi_x = get3();
    row.phi_r = get3();
    row.v_lyap = get();
    row.v_rot = get();
    row.v_trans = get();
    row.v_est = get();
    row.z_norm = get();
    row.clamped = get();
    return row;
}

struct SimLog {
    std::vector<LogRow> rows;

    void check_monotonic() const {
        for (size_t i = 1; i < rows.size(); ++i) {
            if (!(rows[i].t > rows[i - 1].t)) {
                throw InvalidSpec("SimLog: time must be strictly increasing");
            }
        }
    }
};

inline void write_log(const SimLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_log: cannot open '" + path + "'");
    out << log_header() << '\n';
    std::array<double, kLogColumns> values{};
    char buf[32];
    std::string line;
    line.reserve(kLogColumns * 26);
    for (const auto& row : log.rows) {
        row_to_values(row, values);
        line.clear();
        for (int c = 0; c < kLogColumns; ++c) {
            const int len = std::snprintf(buf, sizeof(buf), "%.17g", values[c]);
            if (c) line.push_back(',');
            line.append(buf, static_cast<size_t>(len));
        }
        line.push_back('\n');
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
    if (!out) throw IoError("write_log: write failure on '" + path + "'");
}

inline SimLog read_log(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_log: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError("read_log: empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != log_header()) {
        throw SchemaMismatch("read_log: header does not match the telemetry schema");
    }

    SimLog log;
    std::array<double, kLogColumns> values{};
    size_t row_index = 0;
    while (std::getline(in, line)) {
        ++row_index;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const char* p = line.c_str();
        for (int c = 0; c < kLogColumns; ++c) {
            char* end = nullptr;
            values[c] = std::strtod(p, &end);
            if (end == p) {
                throw IoError("read_log: row " + std::to_string(row_index) +
                              ": malformed field " + std::to_string(c));
            }
            p = end;
            const bool last = (c == kLogColumns - 1);
            if (!last) {
                if (*p != ',') {
                    throw IoError("read_log: row " + std::to_string(row_index) +
                                  ": truncated after field " + std::to_string(c));
                }
                ++p;
            } else if (*p != '\0') {
                throw IoError("read_log: row " + std::to_string(row_index) +
                              ": trailing data");
            }
        }
        log.rows.push_back(row_from_values(values));
    }
    log.check_monotonic();
    return log;
}

}  // namespace sanm::harness
