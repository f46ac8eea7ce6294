import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
img2 = img.crop(box=(0, 0, 64, 48))
