import numpy as np
import pytest

import latentdp as l

FACE_COUNT = 200
FACE_SIZE = 32
FACE_SEED = 42
CODEC_DIM = 16


@pytest.fixture(scope="session")
def faces():
    return l.make_synthetic_faces(FACE_COUNT, FACE_SIZE, FACE_SIZE, seed=FACE_SEED)


@pytest.fixture(scope="session")
def codec_model(faces):
    return l.fit_codec(faces, CODEC_DIM)


@pytest.fixture(scope="session")
def face_latents(faces, codec_model):
    return np.stack([l.encode(codec_model, f) for f in faces])
