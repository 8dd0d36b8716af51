#pragma once

#include "usdl/multipath.hpp"
#include "usdl/nethead.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace usdl {

/// Trained model plus the settings that produced it. Single-head models
/// (regression, USDL) are stored as one head with no DD head.
///
/// Text layout, one item per line, reals as hex floats:
///   usdl-checkpoint 1
///   mode <name>
///   <train-config key> <value>        (pooling, learning_rate, ...)
///   rule <drop_low> <drop_high> <multiplier>
///   heads <K>
///   dd_head <0|1>
///   head <index|dd> <D> <H1> <H2> <m>
///   <w1|b1|w2|b2|w3|b3> <row-major values...>
struct Checkpoint {
    std::string mode;
    TrainConfig train;
    FusionRule rule;
    MultiHeadParams model;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

void write_checkpoint(std::ostream& os, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& is);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace usdl
