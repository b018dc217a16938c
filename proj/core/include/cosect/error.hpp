// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cosect {

enum class ErrorCode {
    InvalidDepth,
    MissingPose,
    MalformedDataset,
    ShapeMismatch,
    Divergence,
    BadResolution,
    MalformedMeshFile,
    EmptyMesh,
    InvalidArgument,
    IoError,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::InvalidDepth: return "INVALID_DEPTH";
        case ErrorCode::MissingPose: return "MISSING_POSE";
        case ErrorCode::MalformedDataset: return "MALFORMED_DATASET";
        case ErrorCode::ShapeMismatch: return "SHAPE_MISMATCH";
        case ErrorCode::Divergence: return "DIVERGENCE";
        case ErrorCode::BadResolution: return "BAD_RESOLUTION";
        case ErrorCode::MalformedMeshFile: return "MALFORMED_MESH_FILE";
        case ErrorCode::EmptyMesh: return "EMPTY_MESH";
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::IoError: return "IO_ERROR";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace cosect
