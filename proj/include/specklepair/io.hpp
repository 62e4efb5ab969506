#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "specklepair/correlator.hpp"
#include "specklepair/probe.hpp"

namespace specklepair {

// Binary container round trips. All files carry an 8-byte magic, a fixed
// little-endian header (64 or 128 bytes) and a raw payload; layouts are
// documented in docs/FORMATS.md. Writers and readers are bit-exact
// inverses of each other.

void write_field(const std::string& path, const FieldGrid& field);
FieldGrid read_field(const std::string& path);

void write_mask(const std::string& path, const PhaseMask& mask,
                double pitch_mm);
PhaseMask read_mask(const std::string& path, double* pitch_mm = nullptr);

void write_screen(const std::string& path, const DiffuserScreen& screen);
DiffuserScreen read_screen(const std::string& path);

void write_tm(const std::string& path, const TransmissionMatrix& tm);
TransmissionMatrix read_tm(const std::string& path);

void write_frames(const std::string& path, const FrameStack& stack);
FrameStack read_frames(const std::string& path);

void write_corr(const std::string& path, const CorrelationMap& map);
CorrelationMap read_corr(const std::string& path);

// 8-bit PGM preview normalized to the image maximum; the log scale spans
// four decades below the maximum.
void write_pgm(const std::string& path, const RealImage& image,
               bool log_scale = false);

// Single-row peak statistics table (17 significant digits).
void write_stats_csv(const std::string& path, const PeakStats& stats);
PeakStats read_stats_csv(const std::string& path);

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64_file(const std::string& path);

// Plain key=value manifest, one entry per line, written in order.
void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries);

} // namespace specklepair
