#pragma once

#include "ztric/bigint.hpp"
#include "ztric/bsgs.hpp"
#include "ztric/envelope.hpp"
#include "ztric/errors.hpp"
#include "ztric/group.hpp"
#include "ztric/ipfe.hpp"
#include "ztric/matrix.hpp"
#include "ztric/model_io.hpp"
#include "ztric/model_lab.hpp"
#include "ztric/pipeline/components.hpp"
#include "ztric/pipeline/database.hpp"
#include "ztric/pipeline/frame.hpp"
#include "ztric/pipeline/harness.hpp"
#include "ztric/pipeline/net.hpp"
#include "ztric/quantizer.hpp"
#include "ztric/secure_inference.hpp"
#include "ztric/security_validator.hpp"
