// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>
#include <vector>

// Defined in the build-generated template_assets.cpp.
namespace relann::detail {

struct TemplateAsset {
  std::string_view name;
  std::string_view content;
};

const std::vector<TemplateAsset>& template_assets();
std::string_view template_version();

}  // namespace relann::detail
