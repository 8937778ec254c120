#pragma once

#include "testdata.hpp"

#include <gtest/gtest.h>

namespace casbridge::testing {

/// Compares `actual` with a checked-in golden file byte for byte. With
/// CASBRIDGE_UPDATE_GOLDEN=1 the file is rewritten instead.
inline ::testing::AssertionResult matches_golden(const std::string& name, const std::string& actual) {
    const auto path = golden_dir() / name;
    if (updating_goldens()) {
        std::ofstream out(path, std::ios::binary);
        out << actual;
        return ::testing::AssertionSuccess() << "rewrote " << path;
    }
    if (!std::filesystem::exists(path)) return ::testing::AssertionFailure() << "missing golden file " << path;
    const auto expected = read_file(path);
    if (expected == actual) return ::testing::AssertionSuccess();
    std::size_t i = 0;
    while (i < expected.size() && i < actual.size() && expected[i] == actual[i]) ++i;
    return ::testing::AssertionFailure() << name << " differs at byte " << i << " (golden " << expected.size()
                                         << " bytes, actual " << actual.size() << " bytes)\n--- actual ---\n"
                                         << actual;
}

}  // namespace casbridge::testing
