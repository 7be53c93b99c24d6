#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>

// Per-process scratch directory for tests that touch the filesystem.
inline std::filesystem::path scratch_dir() {
    static const std::filesystem::path dir = [] {
        const auto d = std::filesystem::temp_directory_path() /
                       ("eignn-tests-" + std::to_string(::getpid()));
        std::filesystem::create_directories(d);
        return d;
    }();
    return dir;
}

inline std::string scratch_file(const std::string& name) {
    return (scratch_dir() / name).string();
}
