import os
import numpy as np
from PIL import Image
arr = np.array(Image.open(os.environ["ORIGINAL_IMAGE_PATH"]))
out = np.rot90(arr, 2)
