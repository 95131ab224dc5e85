#pragma once

#include <optional>

#include "dtgs/camera.hpp"
#include "dtgs/image.hpp"

namespace dtgs {

/// One viewpoint: low-light RGB, synchronized thermal, camera, and (for
/// evaluation only) the bright ground truth when the dataset provides it.
struct MultiViewFrame {
    ImageRGB rgb_low;
    ImageGray thermal;
    Camera camera;
    std::optional<ImageRGB> rgb_gt_bright;

    bool shapes_consistent() const {
        if (rgb_low.width != camera.width || rgb_low.height != camera.height) return false;
        if (!rgb_low.same_shape(thermal)) return false;
        if (rgb_gt_bright && !rgb_low.same_shape(*rgb_gt_bright)) return false;
        return true;
    }
};

}  // namespace dtgs
