import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
out = img.rotate(angle=180)
