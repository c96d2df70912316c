#pragma once

// Umbrella header for the panoforge toolkit: equirectangular panorama
// geometry, analytic multimodal scene synthesis, distance-map-to-mesh
// reconstruction with PBR texture export, occlusion-aware mask sampling,
// panoramic perception metrics, and a toy MIMO rectified-flow core.

#include "panoforge/bvh.hpp"
#include "panoforge/common.hpp"
#include "panoforge/erp.hpp"
#include "panoforge/flow/assemble.hpp"
#include "panoforge/flow/checkpoint.hpp"
#include "panoforge/flow/latent.hpp"
#include "panoforge/flow/lora.hpp"
#include "panoforge/flow/loss.hpp"
#include "panoforge/flow/model.hpp"
#include "panoforge/flow/sampler.hpp"
#include "panoforge/flow/train.hpp"
#include "panoforge/image_io.hpp"
#include "panoforge/mesh.hpp"
#include "panoforge/metrics.hpp"
#include "panoforge/obj_io.hpp"
#include "panoforge/occlusion.hpp"
#include "panoforge/panomap.hpp"
#include "panoforge/projection.hpp"
#include "panoforge/scene.hpp"
